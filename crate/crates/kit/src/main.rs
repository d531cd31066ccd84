//! Command-line driver for the DDR verification experiments.

use clap::{Parser, ValueEnum};
use ddr_kit::config::{
    AlphaSpec, CompactnessSide, ExperimentConfig, GammaSpec, MeshFamily, MuSpec,
};
use ddr_kit::experiments;
use ddr_kit::report::ExperimentReport;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExperimentName {
    VerifyComplex,
    RatesPrimal,
    RatesAdjoint,
    Constants,
    Compactness,
    VerifyQi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MeshArg {
    Tet,
    Hex,
    Agglo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MuArg {
    Id,
    Diag,
    Piecewise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlphaArg {
    #[value(name = "hF", alias = "hf")]
    HF,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Curl,
    Div,
}

/// Arbitrary-order discrete de Rham complexes on polytopal meshes:
/// structure verification, consistency rates and compactness experiments.
#[derive(Parser, Debug)]
#[command(name = "ddr-kit", version, about)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: ExperimentName,

    /// Polynomial degree of the complex.
    #[arg(long, default_value_t = 0)]
    k: i64,

    /// Finite-element degree of the quasi-interpolators (>= k+1; k+3 enables
    /// the lifting checks).
    #[arg(long, default_value_t = 1)]
    ell: i64,

    /// Mesh family.
    #[arg(long, value_enum, default_value_t = MeshArg::Tet)]
    mesh: MeshArg,

    /// Refinement list (subdivisions per axis), comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
    n: Vec<usize>,

    /// Essential boundary part: none | all | xmin | ids:<f0,f1,...>.
    #[arg(long, default_value = "none")]
    gamma: String,

    /// Physical parameter.
    #[arg(long, value_enum, default_value_t = MuArg::Id)]
    mu: MuArg,

    /// Boundary weight family for the curl-side trace measure.
    #[arg(long, value_enum, default_value_t = AlphaArg::HF)]
    alpha: AlphaArg,

    /// Seed for the reproducible samplers.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Feasibility/solver tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,

    /// Output prefix; writes <out>.csv and <out>.md.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Compactness side.
    #[arg(long, value_enum, default_value_t = SideArg::Curl)]
    side: SideArg,

    /// Run the mesh-family members on worker threads.
    #[arg(long, default_value_t = false)]
    parallel: bool,
}

fn parse_gamma(s: &str) -> Result<GammaSpec, String> {
    match s {
        "none" => Ok(GammaSpec::None),
        "all" => Ok(GammaSpec::All),
        "xmin" => Ok(GammaSpec::Xmin),
        other => {
            if let Some(list) = other.strip_prefix("ids:") {
                let ids = list
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(GammaSpec::Ids(ids))
            } else {
                Err(format!("unknown gamma spec '{other}'"))
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let gamma = match parse_gamma(&cli.gamma) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    let config = ExperimentConfig {
        k: cli.k,
        ell: cli.ell,
        mesh: match cli.mesh {
            MeshArg::Tet => MeshFamily::Tet,
            MeshArg::Hex => MeshFamily::Hex,
            MeshArg::Agglo => MeshFamily::Agglo,
        },
        n_list: cli.n.clone(),
        gamma,
        mu: match cli.mu {
            MuArg::Id => MuSpec::Identity,
            MuArg::Diag => MuSpec::Diag,
            MuArg::Piecewise => MuSpec::Piecewise,
        },
        alpha: match cli.alpha {
            AlphaArg::HF => AlphaSpec::HF,
            AlphaArg::One => AlphaSpec::One,
        },
        seed: cli.seed,
        tol: cli.tol,
        out: cli.out.clone(),
        side: match cli.side {
            SideArg::Curl => CompactnessSide::Curl,
            SideArg::Div => CompactnessSide::Div,
        },
        parallel: cli.parallel,
    };

    let run = |config: &ExperimentConfig| -> Result<ExperimentReport, String> {
        match cli.experiment {
            ExperimentName::VerifyComplex => experiments::run_verify_complex(config),
            ExperimentName::RatesPrimal => experiments::run_rates_primal(config),
            ExperimentName::RatesAdjoint => experiments::run_rates_adjoint(config),
            ExperimentName::Constants => experiments::run_constants(config),
            ExperimentName::Compactness => experiments::run_compactness(config),
            ExperimentName::VerifyQi => experiments::run_verify_qi(config),
        }
    };

    // Optional parallelism over mesh-family members: run single-n configs on
    // scoped worker threads and merge the reports in order. Compactness needs
    // consecutive pairs, so it stays sequential.
    let result: Result<ExperimentReport, String> = if config.parallel
        && config.n_list.len() > 1
        && cli.experiment != ExperimentName::Compactness
    {
        let configs: Vec<ExperimentConfig> = config
            .n_list
            .iter()
            .map(|&n| {
                let mut c = config.clone();
                c.n_list = vec![n];
                c
            })
            .collect();
        let results: Vec<Result<ExperimentReport, String>> = std::thread::scope(|scope| {
            let handles: Vec<_> = configs
                .iter()
                .map(|c| scope.spawn(move || run(c)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        results.into_iter().try_fold(
            ExperimentReport::default(),
            |mut acc, r| -> Result<ExperimentReport, String> {
                acc.merge(r?);
                Ok(acc)
            },
        )
    } else {
        run(&config)
    };

    match result {
        Ok(report) => {
            report.print_summary();
            if let Some(out) = &config.out {
                let csv = out.with_extension("csv");
                let md = out.with_extension("md");
                if let Err(e) = report.write_csv(&csv) {
                    eprintln!("error writing {}: {e}", csv.display());
                    std::process::exit(2);
                }
                if let Err(e) = report.write_markdown(&md) {
                    eprintln!("error writing {}: {e}", md.display());
                    std::process::exit(2);
                }
                println!("wrote {} and {}", csv.display(), md.display());
            }
            if !report.passed() {
                eprintln!("gated criteria FAILED");
                std::process::exit(1);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
