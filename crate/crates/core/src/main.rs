use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sievefit::io::{self, Links, RunConfig};
use sievefit::par::set_threads;
use sievefit::{Error, LinkFamily, Result};

#[derive(Parser)]
#[command(name = "sievefit", version, about = "Sieve MLE for current status data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model to a dataset; writes fit.json and curves.csv.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the Monte Carlo study; writes summary.json, replicates.csv, bands.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate AIC over a grid of basis sizes; writes aic.csv.
    Aic {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Re-evaluate curves from a saved fit.json.
    Predict {
        #[arg(long)]
        fit: PathBuf,
        /// Grid points per function.
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Output file; defaults to curves.csv next to the fit.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the parallel paths.
    #[arg(long, env = "SIEVEFIT_THREADS")]
    threads: Option<usize>,
    /// Comma-separated links, e.g. extreme_value,logistic.
    #[arg(long, value_delimiter = ',')]
    link: Option<Vec<LinkFamily>>,
    /// Basis sizes K0,K1,...
    #[arg(long, value_delimiter = ',')]
    knots: Option<Vec<usize>>,
    /// Spline degrees D0,D1,...
    #[arg(long, value_delimiter = ',')]
    degree: Option<Vec<usize>>,
}

impl Common {
    fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::read(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(l) = &self.link {
            cfg.link = Links::Many(l.clone());
        }
        if let Some(k) = &self.knots {
            cfg.knots = Some(k.clone());
        }
        if let Some(d) = &self.degree {
            cfg.degrees = Some(d.clone());
        }
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::Config("threads must be positive".into()));
            }
            set_threads(t);
        }
        cfg.validate()?;
        let out = self
            .out_dir
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { data, common } => {
            let (cfg, out) = common.resolve()?;
            let file = io::cmd_fit(&data, &cfg, &out)?;
            for r in &file.fits {
                println!("link {}: loglik {:.6}, AIC {:.4}, knots {:?}", r.link, r.loglik, r.aic, r.knots);
                for c in &r.coefficients {
                    let se = c.se.map_or_else(|| "-".into(), |s| format!("{s:.4}"));
                    println!("  {:<12}{:>10.4}{:>10}", c.name, c.estimate, se);
                }
            }
        }
        Command::Simulate { common } => {
            let (cfg, out) = common.resolve()?;
            let report = io::cmd_simulate(&cfg, &out)?;
            print!("{}", io::format_table(&report.summary));
        }
        Command::Aic { data, common } => {
            let (cfg, out) = common.resolve()?;
            for r in io::cmd_aic(&data, &cfg, &out)? {
                println!("link {}: selected {:?}", r.link, r.chosen);
            }
        }
        Command::Predict { fit, points, out } => {
            let out = out.unwrap_or_else(|| {
                fit.parent()
                    .map_or_else(|| PathBuf::from("curves.csv"), |p| p.join("curves.csv"))
            });
            io::predict(&fit, points, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(io::exit_code(&e) as u8)
        }
    }
}
