use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radelast::cli_io::{plot_outputs, write_outputs, RunConfig};
use radelast::evolution::{refinement_study, run, Preset, RunSpec};
use radelast::grid::Scheme;
use radelast::kinematics::identity_study;
use radelast::stored_energy::{audit_assumptions, AuditSampling, StoredEnergyModel};
use radelast::{Error, NewtonOptions};

#[derive(Parser, Debug)]
#[command(
    name = "radelast",
    version,
    about = "Variational time stepping for radial polyconvex elastodynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; RADELAST_<SECTION>__<KEY> variables override its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed (overrides seed)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(0..=radelast::cli_io::MAX_SEED))]
    seed: Option<u64>,

    /// Print only errors
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the time stepper and write diagnostics, snapshots and a manifest
    Run,
    /// Check the stored-energy model against its growth and convexity assumptions
    AuditModel,
    /// Convergence tables for the null-Lagrangian and transport identities
    CheckIdentities {
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        levels: Vec<usize>,
        /// Only nodes with rho at least this enter the max-norm
        #[arg(long, default_value_t = 0.25)]
        window: f64,
        /// Node family; defaults to grid.scheme of the config
        #[arg(long)]
        scheme: Option<Scheme>,
    },
    /// Grid and time refinement of the per-step defects and the dissipation
    Refine {
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        levels: Vec<usize>,
        /// Number of time-step halvings
        #[arg(long, default_value_t = 2)]
        halvings: usize,
        /// Steps at the coarsest time step
        #[arg(long, default_value_t = 10)]
        horizon: usize,
    },
    /// Draw energy and profile charts (SVG) from the files of a previous run
    Plot,
}

fn load_config(cli: &Cli) -> Result<Option<RunConfig>, Error> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let mut cfg = RunConfig::parse_with_env(&text, std::env::vars()).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        e => e,
    })?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    Ok(Some(cfg))
}

fn require_config(cli: &Cli) -> Result<RunConfig, Error> {
    load_config(cli)?.ok_or_else(|| Error::Config("--config is required".into()))
}

fn fmt_row(label: &str, errors: &[f64], orders: &[f64]) -> String {
    let e: Vec<String> = errors.iter().map(|x| format!("{x:10.3e}")).collect();
    let o: Vec<String> = orders
        .iter()
        .map(|x| {
            if x.is_finite() {
                format!("{x:5.2}")
            } else {
                "exact".into()
            }
        })
        .collect();
    format!("{label:<18} {}   orders {}", e.join(" "), o.join(" "))
}

fn cmd_run(cli: &Cli) -> Result<(), Error> {
    let cfg = require_config(cli)?;
    let out = run(&cfg.run_spec())?;
    let status = match &out.error {
        None => "ok".to_string(),
        Some(e) => e.to_string(),
    };
    let dir = PathBuf::from(&cfg.output.dir);
    let manifest = write_outputs(&out.trajectory, &cfg, &status, &dir)?;
    if !cli.quiet {
        let d = &out.trajectory.diagnostics;
        let first = d.first().unwrap();
        let last = d.last().unwrap();
        let min_ap = d
            .iter()
            .map(|x| x.min_alpha_prime)
            .fold(f64::INFINITY, f64::min);
        let max_ent = d[1..]
            .iter()
            .map(|x| x.max_entropy_defect)
            .fold(f64::NEG_INFINITY, f64::max);
        println!("steps      {}", manifest.steps_completed);
        println!("energy     {:.12e} -> {:.12e}", first.energy, last.energy);
        println!("min alpha' {min_ap:.6e}");
        if d.len() > 1 {
            println!("max entropy defect {max_ent:.3e}");
        }
        println!("outputs    {}", dir.display());
    }
    match out.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_audit(cli: &Cli) -> Result<(), Error> {
    let model = match load_config(cli)? {
        Some(c) => c.model.build(),
        None => StoredEnergyModel::default(),
    };
    let report = audit_assumptions(&model, &AuditSampling::default());
    if !cli.quiet {
        println!(
            "phi = {}, psi = {}, g = {}, h = {}",
            model.phi, model.psi, model.g, model.h
        );
        print!("{report}");
    }
    Ok(())
}

fn cmd_identities(
    cli: &Cli,
    levels: &[usize],
    window: f64,
    scheme: Option<Scheme>,
) -> Result<(), Error> {
    let scheme = match (scheme, load_config(cli)?) {
        (Some(s), _) => s,
        (None, Some(c)) => c.grid.scheme,
        (None, None) => Scheme::CellCentered,
    };
    let rows = identity_study(levels, scheme, window)?;
    if !cli.quiet {
        println!("max residual over rho >= {window}, N = {levels:?}, {scheme:?}");
        for r in rows {
            println!("{}", fmt_row(&r.label, &r.errors, &r.orders));
        }
    }
    Ok(())
}

fn cmd_refine(cli: &Cli, levels: &[usize], halvings: usize, horizon: usize) -> Result<(), Error> {
    let spec = match load_config(cli)? {
        Some(c) => c.run_spec(),
        None => RunSpec {
            model: StoredEnergyModel::default(),
            n: 64,
            tau: 1e-3,
            steps: 1,
            lambda: 1.0,
            preset: Preset::Perturbed {
                epsilon: 0.05,
                modes: 0,
                seed: cli.seed.unwrap_or(0),
            },
            newton: NewtonOptions::default(),
            el_window: 0.25,
        },
    };
    let r = refinement_study(&spec, levels, halvings, horizon)?;
    if !cli.quiet {
        println!("one step, tau = {:e}", spec.tau);
        let el: Vec<f64> = r.space.iter().map(|l| l.el_defect).collect();
        println!("{}", fmt_row("EL defect", &el, &r.el_orders));
        for l in &r.space {
            println!(
                "N = {:<5} max entropy defect {:10.3e}",
                l.n, l.max_entropy_defect
            );
        }
        println!("entropy constant C = {:.3e}", r.entropy_constant);
        println!(
            "dissipation over t in [0, {:e}] at N = {}",
            spec.tau * horizon as f64,
            spec.n
        );
        for l in &r.time {
            println!(
                "tau = {:<10e} steps {:<5} dissipation {:.6e}",
                l.tau, l.steps, l.dissipation
            );
        }
        let ratios: Vec<String> = r
            .dissipation_ratios
            .iter()
            .map(|x| format!("{x:.3}"))
            .collect();
        println!("ratios {}", ratios.join(" "));
    }
    Ok(())
}

fn cmd_plot(cli: &Cli) -> Result<(), Error> {
    let dir = match (&cli.out, load_config(cli)?) {
        (Some(d), _) => d.clone(),
        (None, Some(c)) => PathBuf::from(c.output.dir),
        (None, None) => PathBuf::from("out"),
    };
    let files = plot_outputs(Path::new(&dir))?;
    if !cli.quiet {
        for f in files {
            println!("{}", f.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run => cmd_run(&cli),
        Command::AuditModel => cmd_audit(&cli),
        Command::CheckIdentities {
            levels,
            window,
            scheme,
        } => cmd_identities(&cli, levels, *window, *scheme),
        Command::Refine {
            levels,
            halvings,
            horizon,
        } => cmd_refine(&cli, levels, *halvings, *horizon),
        Command::Plot => cmd_plot(&cli),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
