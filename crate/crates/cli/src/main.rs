use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use contrace_cli::config::ConfigFile;
use contrace_cli::data::{DataDir, DATA_DIR_ENV, DEFAULT_DATA_DIR};
use contrace_cli::service::{self, defaults, InvestigationRequest, Service};
use contrace_core::epi::{integrate, write_series_csv, CompartmentState, EpiParams, Model};
use contrace_core::ingest::{read_areas_file, read_intervals_file};
use contrace_core::investigation::export::{write_black_areas_csv, write_classes_csv, write_suspects_csv};
use contrace_core::sim::{simulate, SimConfig};
use contrace_core::store::io::{read_patients_file, read_points_file};
use contrace_core::{Error, PatientStatus, PersonId, ProximityConfig, Timestamp};

#[derive(Parser)]
#[command(name = "contrace", version, about = "Contact investigation over trajectory data")]
struct Cli {
    /// Data directory.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,

    /// key=value file with defaults for command options.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world and write ingestible files.
    Simulate(SimulateArgs),
    /// Store trajectories, intervals, areas, zones and patients from files.
    Ingest(IngestArgs),
    /// Report a confirmed patient.
    Report {
        person: String,
        /// Confirmation time, epoch seconds.
        #[arg(long)]
        at: i64,
    },
    /// Change a patient's status (active, recovered, dead).
    SetStatus { person: String, status: String },
    /// Run an investigation and save its results.
    Investigate(InvestigateArgs),
    /// Answer a person's risk query.
    Query {
        person: String,
        #[arg(long)]
        investigation: Option<String>,
    },
    /// Print distance classes.
    Classes(ExportArgs),
    /// Print black-area counts.
    BlackAreas(ExportArgs),
    /// Print black-area visitors.
    Suspects(ExportArgs),
    /// Epidemic model tools.
    #[command(subcommand)]
    Epi(EpiCommand),
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    persons: Option<usize>,
    #[arg(long)]
    pois: Option<usize>,
    #[arg(long)]
    days: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    participation: Option<f64>,
    #[arg(long)]
    p_offline: Option<f64>,
    #[arg(long)]
    p_trans: Option<f64>,
    #[arg(long)]
    initial_patients: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Trajectory CSV or JSONL.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Interval CSV or JSONL; area ids resolve against stored areas.
    #[arg(long)]
    intervals: Option<PathBuf>,
    /// Exclusion zones CSV; replaces the stored zones.
    #[arg(long)]
    zones: Option<PathBuf>,
    /// Areas CSV; replaces the stored areas.
    #[arg(long)]
    areas: Option<PathBuf>,
    /// Patient registry CSV.
    #[arg(long)]
    patients: Option<PathBuf>,
    /// Sampling step for interval expansion, seconds.
    #[arg(long)]
    delta_t: Option<i64>,
}

#[derive(Args)]
struct InvestigateArgs {
    /// Current date, epoch seconds; defaults to the latest stored time.
    #[arg(long)]
    as_of: Option<i64>,
    #[arg(long)]
    ip_days: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta_t: Option<i64>,
    #[arg(long)]
    alpha: Option<u32>,
    /// Only count black-area visits this many seconds before the current date.
    #[arg(long)]
    black_window: Option<i64>,
    /// Follow contact chains forward in time only.
    #[arg(long)]
    causal: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    investigation: Option<String>,
}

#[derive(Subcommand)]
enum EpiCommand {
    /// Contact rate and transmission estimate from an investigation.
    Estimate {
        #[arg(long)]
        p_trans: Option<f64>,
        #[arg(long)]
        investigation: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Integrate an SIR or SEIR model and print the series as CSV.
    Simulate {
        #[arg(long, default_value = "sir")]
        model: String,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        sigma: Option<f64>,
        /// Population.
        #[arg(long)]
        n: f64,
        #[arg(long)]
        i0: f64,
        #[arg(long, default_value_t = 0.0)]
        e0: f64,
        /// Days.
        #[arg(long)]
        horizon: f64,
        /// Days.
        #[arg(long)]
        step: f64,
        /// Print every k-th step.
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::Invalid(msg.into()).into()
}

fn person(id: &str) -> anyhow::Result<PersonId> {
    Ok(PersonId::new(id)?)
}

fn open(data: &DataDir) -> anyhow::Result<Service> {
    Service::open(data.clone()).with_context(|| format!("opening {}", data.root().display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let conf = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let root = match cli.data_dir {
        Some(d) => d,
        None => conf.pick(None, "data_dir", PathBuf::from(DEFAULT_DATA_DIR))?,
    };
    let data = DataDir::new(root);
    let mut out = std::io::stdout().lock();

    match cli.command {
        Command::Simulate(a) => {
            let d = SimConfig::default();
            let cfg = SimConfig {
                persons: conf.pick(a.persons, "persons", d.persons)?,
                pois: conf.pick(a.pois, "pois", d.pois)?,
                days: conf.pick(a.days, "days", d.days)?,
                seed: conf.pick(a.seed, "seed", d.seed)?,
                participation: conf.pick(a.participation, "participation", d.participation)?,
                p_offline: conf.pick(a.p_offline, "p_offline", d.p_offline)?,
                p_trans: conf.pick(a.p_trans, "p_trans", d.p_trans)?,
                initial_patients: conf.pick(a.initial_patients, "initial_patients", d.initial_patients)?,
                proximity: ProximityConfig::new(
                    conf.pick(None, "epsilon", defaults::epsilon_m())?,
                    conf.pick(None, "delta_t", defaults::delta_t_s())?,
                )?,
                ..d
            };
            let sim = simulate(&cfg)?;
            sim.write_dir(&a.out_dir)?;
            let gt = &sim.ground_truth;
            writeln!(out, "persons {} participants {}", cfg.persons, sim.participants.len())?;
            writeln!(out, "batches {}", sim.batches.len())?;
            writeln!(
                out,
                "infected {} contacts {}",
                gt.true_infected.len(),
                gt.contacts.len()
            )?;
            writeln!(out, "end {}", sim.end())?;
        }
        Command::Ingest(a) => {
            let mut svc = open(&data)?;
            if let Some(p) = &a.areas {
                svc.set_areas(read_areas_file(p)?)?;
                writeln!(out, "areas {}", svc.areas().len())?;
            }
            if let Some(p) = &a.zones {
                svc.set_zones_from(p)?;
            }
            if a.points.is_some() || a.intervals.is_some() {
                let points = a
                    .points
                    .as_deref()
                    .map(read_points_file)
                    .transpose()?
                    .unwrap_or_default();
                let rows = a
                    .intervals
                    .as_deref()
                    .map(read_intervals_file)
                    .transpose()?
                    .unwrap_or_default();
                let dt = conf.pick(a.delta_t, "delta_t", defaults::delta_t_s())?;
                if dt < 0 {
                    return Err(invalid("delta_t must be >= 0"));
                }
                let r = svc.ingest_mixed(points, &rows, dt)?;
                writeln!(
                    out,
                    "accepted {} duplicates {} filtered {}",
                    r.accepted, r.duplicates, r.filtered
                )?;
            }
            if let Some(p) = &a.patients {
                let n = svc.import_patients(read_patients_file(p)?)?;
                writeln!(out, "patients {n}")?;
            }
        }
        Command::Report { person: p, at } => {
            let rec = open(&data)?.report_patient(person(&p)?, Timestamp::new(at)?)?;
            writeln!(out, "{} {} {}", rec.person, rec.status, rec.confirmed_at)?;
        }
        Command::SetStatus { person: p, status } => {
            let status: PatientStatus = status.parse()?;
            let rec = open(&data)?.set_status(&person(&p)?, status)?;
            writeln!(out, "{} {} {}", rec.person, rec.status, rec.confirmed_at)?;
        }
        Command::Investigate(a) => {
            let svc = open(&data)?;
            let req = InvestigationRequest {
                as_of: match a.as_of {
                    Some(t) => t,
                    None => svc.latest_time().secs(),
                },
                ip_days: conf.pick(a.ip_days, "ip_days", defaults::ip_days())?,
                epsilon_m: conf.pick(a.epsilon, "epsilon", defaults::epsilon_m())?,
                delta_t_s: conf.pick(a.delta_t, "delta_t", defaults::delta_t_s())?,
                alpha: conf.pick(a.alpha, "alpha", defaults::alpha())?,
                black_area_window_s: match a.black_window {
                    Some(w) => Some(w),
                    None => conf.get("black_window")?,
                },
                causal: a.causal || conf.get("causal")?.unwrap_or(false),
            };
            let cfg = req.config()?;
            let snap = svc.snapshot(&cfg);
            let (id, inv) = service::execute_investigation(&data, &snap, svc.areas(), cfg)?;
            writeln!(out, "investigation {id}")?;
            writeln!(out, "as_of {}", cfg.current_date)?;
            for (d, class) in inv.classification.classes().iter().enumerate() {
                writeln!(out, "class {d}: {}", class.len())?;
            }
            let black = inv.black_areas.black_areas().count();
            writeln!(out, "black areas {black} of {}", inv.black_areas.areas.len())?;
            writeln!(out, "black-area visitors {}", inv.suspects.union().len())?;
        }
        Command::Query {
            person: p,
            investigation,
        } => {
            let id = data.resolve_investigation(investigation.as_deref())?;
            let inv = data.load_investigation(&id)?;
            serde_json::to_writer(&mut out, &inv.query(&p)?)?;
            writeln!(out)?;
        }
        Command::Classes(a) => {
            let inv = data.load_investigation(&data.resolve_investigation(a.investigation.as_deref())?)?;
            write_classes_csv(&mut out, &inv.classification)?;
        }
        Command::BlackAreas(a) => {
            let inv = data.load_investigation(&data.resolve_investigation(a.investigation.as_deref())?)?;
            write_black_areas_csv(&mut out, &inv.black_areas)?;
        }
        Command::Suspects(a) => {
            let inv = data.load_investigation(&data.resolve_investigation(a.investigation.as_deref())?)?;
            write_suspects_csv(&mut out, &inv.suspects)?;
        }
        Command::Epi(EpiCommand::Estimate {
            p_trans,
            investigation,
            format,
        }) => {
            let p = p_trans
                .or(conf.get("p_trans")?)
                .ok_or_else(|| invalid("--p-trans is required"))?;
            let id = data.resolve_investigation(investigation.as_deref())?;
            let est = service::epi_estimate(&data, &id, p)?;
            match format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut out, &est)?;
                    writeln!(out)?;
                }
                Format::Csv => {
                    writeln!(out, "window_start,window_end,contacts_per_infective_per_day,distinct_pairs,infective_count,p_trans,beta_hat,theta_hat,iu_size")?;
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        est.window_start,
                        est.window_end,
                        est.contacts_per_infective_per_day,
                        est.distinct_pairs,
                        est.infective_count,
                        est.p_trans,
                        est.beta_hat,
                        est.theta_hat,
                        est.iu_size
                    )?;
                }
            }
        }
        Command::Epi(EpiCommand::Simulate {
            model,
            beta,
            gamma,
            sigma,
            n,
            i0,
            e0,
            horizon,
            step,
            every,
        }) => {
            let model: Model = model.parse()?;
            if model == Model::Seir && sigma.is_none() {
                return Err(invalid("--sigma is required for seir"));
            }
            let params = EpiParams {
                sigma: sigma.unwrap_or(1.0),
                ..EpiParams::sir(beta, gamma)
            };
            let init = CompartmentState {
                s: n - i0 - e0,
                e: e0,
                i: i0,
                r: 0.0,
                n,
            };
            let series = integrate(model, &params, &init, horizon, step, every)?;
            write_series_csv(&mut out, &series)?;
        }
        Command::Serve { port, bind } => {
            let port = conf.pick(port, "port", 8080u16)?;
            let bind = conf.pick(bind, "bind", "127.0.0.1".to_string())?;
            let addr: SocketAddr = format!("{bind}:{port}")
                .parse()
                .map_err(|_| invalid(format!("bad bind address {bind}:{port}")))?;
            serve(data, addr)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn serve(data: DataDir, addr: SocketAddr) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let svc = open(&data)?;
    tracing::info!(points = svc.store().len(), dir = %data.root().display(), "loaded data directory");
    let app = contrace_cli::api::router(svc);
    tokio::runtime::Runtime::new()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!(%addr, "listening");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_validation() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
