//! Experiment configuration shared by the CLI and the acceptance suite.

use ddr_core::mesh::{gen_agglomerated, gen_hex_cube, gen_tet_cube, MeshError, PolytopalMesh};
use ddr_core::ops::PhysicalParameter;
use ddr_core::quasi::AlphaWeights;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFamily {
    Tet,
    Hex,
    Agglo,
}

impl MeshFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::Tet => "tet",
            MeshFamily::Hex => "hex",
            MeshFamily::Agglo => "agglo",
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<PolytopalMesh, MeshError> {
        match self {
            MeshFamily::Tet => gen_tet_cube(n),
            MeshFamily::Hex => gen_hex_cube(n),
            MeshFamily::Agglo => gen_agglomerated(n, seed),
        }
    }

    /// Whether consecutive family members allow potential comparison by
    /// evaluation on the finer mesh (analytic point location).
    pub fn supports_nesting(&self) -> bool {
        !matches!(self, MeshFamily::Agglo)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GammaSpec {
    None,
    All,
    Xmin,
    Ids(Vec<usize>),
}

impl GammaSpec {
    pub fn name(&self) -> String {
        match self {
            GammaSpec::None => "none".into(),
            GammaSpec::All => "all".into(),
            GammaSpec::Xmin => "xmin".into(),
            GammaSpec::Ids(ids) => format!("ids:{ids:?}"),
        }
    }

    pub fn apply(&self, mesh: PolytopalMesh) -> Result<PolytopalMesh, MeshError> {
        match self {
            GammaSpec::None => Ok(mesh),
            GammaSpec::All => {
                let g: Vec<usize> = mesh.boundary_faces().collect();
                mesh.with_gamma(&g)
            }
            GammaSpec::Xmin => {
                let g = mesh.faces_on_xmin();
                mesh.with_gamma(&g)
            }
            GammaSpec::Ids(ids) => mesh.with_gamma(ids),
        }
    }

    pub fn has_bc(&self) -> bool {
        !matches!(self, GammaSpec::None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MuSpec {
    Identity,
    Diag,
    Piecewise,
}

impl MuSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MuSpec::Identity => "id",
            MuSpec::Diag => "diag",
            MuSpec::Piecewise => "piecewise",
        }
    }

    /// Matrix-valued parameter for the curl/div spaces.
    pub fn build(&self) -> PhysicalParameter {
        match self {
            MuSpec::Identity => PhysicalParameter::identity(),
            MuSpec::Diag => PhysicalParameter::diag(1.0, 2.0, 5.0),
            MuSpec::Piecewise => PhysicalParameter::piecewise_x_split(
                |p| 1.0 + 0.25 * (p.y * p.z).sin(),
                |p| 3.0 + 0.5 * (p.y + p.z).cos(),
                3,
            ),
        }
    }

    /// Scalar parameter for the gradient space.
    pub fn build_scalar(&self) -> PhysicalParameter {
        match self {
            MuSpec::Identity => PhysicalParameter::identity(),
            MuSpec::Diag => PhysicalParameter::scalar(|_| 2.0, i64::MAX),
            MuSpec::Piecewise => PhysicalParameter::piecewise_x_split(
                |p| 1.0 + 0.25 * (p.y * p.z).sin(),
                |p| 3.0 + 0.5 * (p.y + p.z).cos(),
                3,
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaSpec {
    HF,
    One,
}

impl AlphaSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlphaSpec::HF => "hF",
            AlphaSpec::One => "one",
        }
    }

    pub fn weights(&self) -> AlphaWeights {
        match self {
            AlphaSpec::HF => AlphaWeights::FaceDiameter,
            AlphaSpec::One => AlphaWeights::One,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompactnessSide {
    Curl,
    Div,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub k: i64,
    pub ell: i64,
    pub mesh: MeshFamily,
    pub n_list: Vec<usize>,
    pub gamma: GammaSpec,
    pub mu: MuSpec,
    pub alpha: AlphaSpec,
    pub seed: u64,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub side: CompactnessSide,
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 0,
            ell: 1,
            mesh: MeshFamily::Tet,
            n_list: vec![1, 2],
            gamma: GammaSpec::None,
            mu: MuSpec::Identity,
            alpha: AlphaSpec::HF,
            seed: 0,
            tol: 1e-10,
            out: None,
            side: CompactnessSide::Curl,
            parallel: false,
        }
    }
}

impl ExperimentConfig {
    pub fn mesh_for(&self, n: usize) -> Result<PolytopalMesh, MeshError> {
        self.gamma.apply(self.mesh.generate(n, self.seed)?)
    }
}
