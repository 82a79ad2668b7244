use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use storyexp_cli::fuzz::fuzz;
use storyexp_cli::pipeline::{self, DOCUMENT_FILE};
use storyexp_cli::CliError;
use storyexp_core::extract::Gazetteer;
use storyexp_core::model::{write_atomic, DEFAULT_PAGE_BUDGET};
use storyexp_core::{ProviderKind, StoryDocument};

#[derive(Parser)]
#[command(name = "storyexp", version, about = "Build storyline visualizations from plain text")]
struct Cli {
    /// Data directory, one sub-directory per document [env: STORYEXP_DATA]
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Rule,
    Remote,
}

#[derive(Subcommand)]
enum Command {
    /// Paginate a text file into a new document.
    Import {
        text: PathBuf,
        #[arg(long)]
        title: Option<String>,
        /// Document id; derived from the file name by default.
        #[arg(long)]
        id: Option<String>,
        /// Output file; defaults to <data>/<id>/document.json.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Characters per page.
        #[arg(long, default_value_t = DEFAULT_PAGE_BUDGET)]
        page_size: usize,
    },
    /// Find entities and seed one fragment per paragraph.
    Extract {
        doc: PathBuf,
        /// Overrides the document's configured provider.
        #[arg(long, value_enum)]
        provider: Option<ProviderArg>,
        /// Extra `kind<TAB>surface` entries for the rule provider.
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
    /// Compute and commit a layout, printing its metrics.
    Layout {
        doc: PathBuf,
        /// Layout parameter override, e.g. `wiggleWeight=2` (repeatable).
        #[arg(long = "params", value_name = "K=V")]
        params: Vec<String>,
    },
    /// Draw the committed layout as SVG.
    Render {
        doc: PathBuf,
        /// Defaults to storyline.svg beside the document.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print layout metrics.
    Metrics { doc: PathBuf },
    /// Serve the HTTP API over the data directory.
    Serve {
        /// [env: STORYEXP_PORT, default 8080]
        #[arg(long)]
        port: Option<u16>,
    },
    /// Run random edit scripts and check the model's invariants.
    Fuzz {
        /// Starting document; an empty one when omitted.
        doc: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        ops: usize,
    },
}

fn data_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("STORYEXP_DATA").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("data"))
}

/// A document argument is a path, or else the id of a document in the data
/// directory.
fn locate(data: &Path, doc: PathBuf) -> PathBuf {
    let in_data = data.join(&doc);
    if !doc.exists() && in_data.is_dir() {
        in_data
    } else {
        doc
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let data = data_dir(cli.data.clone());
    match cli.command {
        Command::Import { text, title, id, out, page_size } => {
            let body = read(&text)?;
            let stem = text.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let id = pipeline::slug(id.as_deref().unwrap_or(&stem));
            let title = title.unwrap_or_else(|| {
                body.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or(&stem).chars().take(120).collect()
            });
            let doc = pipeline::import(&body, &id, &title, page_size)?;
            let out = out.unwrap_or_else(|| data.join(&id).join(DOCUMENT_FILE));
            pipeline::save(&doc, &out)?;
            println!("pages={}, path={}", doc.pages.len(), out.display());
        }
        Command::Extract { doc, provider, gazetteer } => {
            let (mut d, path) = pipeline::load(&locate(&data, doc))?;
            let extra = match gazetteer {
                Some(p) => Some(Gazetteer::parse(&read(&p)?)?),
                None => None,
            };
            let kind = match provider {
                Some(ProviderArg::Rule) => ProviderKind::Rule,
                Some(ProviderArg::Remote) => ProviderKind::RemoteLm,
                None => d.config.provider_kind,
            };
            let p = pipeline::provider(kind, &d, extra.as_ref())?;
            let s = pipeline::extract(&mut d, &*p)?;
            if s.entities_added + s.fragments_added > 0 {
                d.layout_stale = d.committed_layout.is_some();
                d.bump_version();
                pipeline::save(&d, &path)?;
            }
            println!("paragraphs={}, entities={}, fragments={}", s.paragraphs, s.entities_added, s.fragments_added);
        }
        Command::Layout { doc, params } => {
            let (mut d, path) = pipeline::load(&locate(&data, doc))?;
            let params = pipeline::layout_params(&d.layout_params, &params)?;
            let spec = pipeline::layout(&d, &params)?;
            let m = spec.metrics;
            pipeline::commit(&mut d, params, spec);
            pipeline::save(&d, &path)?;
            println!("{m}");
        }
        Command::Render { doc, out } => {
            let (d, path) = pipeline::load(&locate(&data, doc))?;
            let (svg, warnings) = pipeline::render(&d)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            let out = out.unwrap_or_else(|| path.with_file_name("storyline.svg"));
            write_atomic(&out, svg.as_bytes()).map_err(|e| CliError::io(&out, e))?;
            println!("{}", out.display());
        }
        Command::Metrics { doc } => {
            let (d, _) = pipeline::load(&locate(&data, doc))?;
            println!("{}", pipeline::metrics(&d)?);
        }
        Command::Serve { port } => {
            tracing_subscriber::fmt().with_env_filter(
                tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
            )
            .init();
            let mut config = storyexp_service::ServiceConfig::from_env();
            if let Some(dir) = cli.data {
                config.data_root = dir;
            }
            let port = port.unwrap_or_else(storyexp_service::port_from_env);
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io(Path::new("<runtime>"), e))?;
            rt.block_on(storyexp_service::serve(config, port)).map_err(|e| CliError::io(Path::new("<listener>"), e))?;
        }
        Command::Fuzz { doc, seed, ops } => {
            let mut d = match doc {
                Some(p) => pipeline::load(&locate(&data, p))?.0,
                None => StoryDocument::new("fuzz", "fuzz", vec![String::new()]),
            };
            let r = fuzz(&mut d, seed, ops)?;
            print!("ops={}, applied={}, rejected={}", r.ops, r.applied, r.rejected);
            match r.metrics {
                Some(m) => println!(", {m}"),
                None => println!(),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
