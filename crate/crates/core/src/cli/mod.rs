//! The `travisgo` command line.
//!
//! Exit codes: 0 success, 1 domain error (the machine-readable code and a
//! message go to stderr), 2 usage error.

mod fsutil;
mod join;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

pub use fsutil::{atomic_write, atomic_write_with};
pub use join::{run_join, JoinArgs};

use crate::model::{Category, FilterSet, ModelError, Project, Tag, Username};
use crate::relay::{ServeConfig, DEFAULT_BIND};
use crate::sim::{simulate, SimConfig};
use crate::syntax::file::serialize_post;
use crate::syntax::{export_document, parse_project_file, serialize_project, ExportOrder, SyntaxError, Timecode};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain { code: String, msg: String },
}

impl CliError {
    pub fn domain(code: impl Into<String>, msg: impl fmt::Display) -> Self {
        CliError::Domain {
            code: code.into(),
            msg: msg.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Domain { code, msg } => write!(f, "error: {code}: {msg}"),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::domain(e.code(), &e)
    }
}

impl From<SyntaxError> for CliError {
    fn from(e: SyntaxError) -> Self {
        CliError::domain(e.code(), &e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "travisgo", version, about = "Timecoded collaborative video annotation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    Feed,
    ByAuthor,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Start a project file for a media URL.
    New {
        media_url: String,
        out: PathBuf,
        #[arg(long, default_value = "")]
        title: String,
        #[arg(long, default_value = "")]
        description: String,
        /// Predefined tag (repeatable, without '#').
        #[arg(long = "tag")]
        tags: Vec<String>,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Add a post: FILE AUTHOR START [END] CATEGORY BODY.
    Post {
        file: PathBuf,
        author: String,
        /// Start timecode, MM:SS:CS.
        start: String,
        /// [END] CATEGORY BODY
        #[arg(num_args = 2..=3, required = true, value_name = "[END] CATEGORY BODY")]
        rest: Vec<String>,
    },
    /// Comment on a post (post numbers count from 1 in file order).
    Comment {
        file: PathBuf,
        author: String,
        post_number: u64,
        text: String,
    },
    /// Replace the body of your own post.
    Edit {
        file: PathBuf,
        actor: String,
        post_number: u64,
        body: String,
    },
    /// Print the feed, optionally filtered.
    Show {
        file: PathBuf,
        #[arg(long)]
        category: Option<String>,
        #[arg(long)]
        author: Option<String>,
        /// Required hashtag (repeatable).
        #[arg(long = "tag")]
        tags: Vec<String>,
        /// Only posts whose span covers this timecode.
        #[arg(long)]
        at: Option<String>,
        /// Case-insensitive text search over bodies and comments.
        #[arg(long)]
        search: Option<String>,
        /// Prefix each header with its post number.
        #[arg(long)]
        numbered: bool,
    },
    /// Export a readable Markdown document.
    Export {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "feed")]
        order: OrderArg,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the live-collaboration relay.
    Serve {
        #[arg(long, default_value = DEFAULT_BIND)]
        bind: String,
        /// Seconds an empty session survives.
        #[arg(long, default_value_t = 60)]
        grace: u64,
        /// Client heartbeat interval in seconds; silence for 3x drops.
        #[arg(long, default_value_t = 15)]
        heartbeat: u64,
    },
    /// Join a live session as a headless client.
    Join(JoinArgs),
    /// Run the in-process convergence simulator.
    Simulate {
        clients: usize,
        ops: usize,
        seed: u64,
        /// Inject random disconnects, rejoins, and lost envelopes.
        #[arg(long)]
        faults: bool,
    },
}

fn read_project(path: &Path) -> Result<Project, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::domain("IO_ERROR", format!("{}: {e}", path.display())))?;
    Ok(parse_project_file(&text)?)
}

pub fn write_project(path: &Path, project: &Project) -> Result<(), CliError> {
    atomic_write(path, serialize_project(project).as_bytes())
        .map_err(|e| CliError::domain("IO_ERROR", format!("{}: {e}", path.display())))
}

fn username(s: &str) -> Result<Username, CliError> {
    Ok(Username::new(s)?)
}

fn category(s: &str) -> Result<Category, CliError> {
    Ok(s.to_ascii_uppercase().parse()?)
}

fn timecode(s: &str) -> Result<Timecode, CliError> {
    s.parse::<Timecode>().map_err(|e| SyntaxError::from(e).into())
}

fn run_post(file: &Path, author: &str, start: &str, rest: &[String]) -> Result<(), CliError> {
    let (end, cat, body) = match rest {
        [cat, body] => (None, cat, body),
        [end, cat, body] => (Some(end), cat, body),
        _ => return Err(CliError::Usage("expected [END] CATEGORY BODY".into())),
    };
    let mut project = read_project(file)?;
    let end = end.map(|e| timecode(e)).transpose()?;
    let number = project.create_post(username(author)?, timecode(start)?, end, category(cat)?, body)?;
    write_project(file, &project)?;
    println!("{}", position_of(&project, number));
    Ok(())
}

/// 1-based position of a post in the feed, which is its number after reload.
fn position_of(project: &Project, post_number: u64) -> usize {
    project
        .posts()
        .iter()
        .position(|p| p.post_number == post_number)
        .map_or(0, |i| i + 1)
}

fn run_show(
    file: &Path,
    filter: FilterSet,
    numbered: bool,
) -> Result<(), CliError> {
    let project = read_project(file)?;
    let mut out = String::new();
    for post in project.filter_posts(&filter) {
        if numbered {
            out.push_str(&format!("#{} ", post.post_number));
        }
        out.push_str(&serialize_post(post));
    }
    print!("{out}");
    Ok(())
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::New {
            media_url,
            out,
            title,
            description,
            tags,
            force,
        } => {
            if out.exists() && !force {
                return Err(CliError::domain(
                    "FILE_EXISTS",
                    format!("{} exists (use --force to overwrite)", out.display()),
                ));
            }
            let mut project = Project::new(&media_url)?;
            project.set_meta(&title, &description)?;
            project.define_tags(&tags)?;
            write_project(&out, &project)
        }
        Command::Post {
            file,
            author,
            start,
            rest,
        } => run_post(&file, &author, &start, &rest),
        Command::Comment {
            file,
            author,
            post_number,
            text,
        } => {
            let mut project = read_project(&file)?;
            project.add_comment(username(&author)?, post_number, &text)?;
            write_project(&file, &project)
        }
        Command::Edit {
            file,
            actor,
            post_number,
            body,
        } => {
            let mut project = read_project(&file)?;
            project.edit_post(&username(&actor)?, post_number, &body)?;
            write_project(&file, &project)
        }
        Command::Show {
            file,
            category: cat,
            author,
            tags,
            at,
            search,
            numbered,
        } => {
            let filter = FilterSet {
                category: cat.as_deref().map(category).transpose()?,
                author: author.as_deref().map(username).transpose()?,
                tags: tags
                    .iter()
                    .map(|t| Tag::new(t.trim_start_matches('#')))
                    .collect::<Result<_, _>>()?,
                time_point: at.as_deref().map(timecode).transpose()?,
                text_query: search,
            };
            run_show(&file, filter, numbered)
        }
        Command::Export { file, order, out } => {
            let project = read_project(&file)?;
            let order = match order {
                OrderArg::Feed => ExportOrder::Feed,
                OrderArg::ByAuthor => ExportOrder::ByAuthor,
            };
            let doc = export_document(&project, order);
            match out {
                Some(path) => atomic_write(&path, doc.as_bytes())
                    .map_err(|e| CliError::domain("IO_ERROR", format!("{}: {e}", path.display()))),
                None => {
                    print!("{doc}");
                    Ok(())
                }
            }
        }
        Command::Serve {
            bind,
            grace,
            heartbeat,
        } => {
            let config = ServeConfig {
                bind,
                grace: Duration::from_secs(grace),
                heartbeat: Duration::from_secs(heartbeat),
            };
            runtime()?
                .block_on(crate::relay::serve(config))
                .map_err(|e| match e {
                    crate::relay::RelayError::BindFailure { .. } => CliError::domain("BIND_FAILURE", e),
                    other => CliError::domain("IO_ERROR", other),
                })
        }
        Command::Join(args) => runtime()?.block_on(run_join(args)),
        Command::Simulate {
            clients,
            ops,
            seed,
            faults,
        } => {
            if clients == 0 {
                return Err(CliError::Usage("clients must be at least 1".into()));
            }
            let report = simulate(&SimConfig {
                clients,
                ops,
                seed,
                faults,
            });
            let status = if report.passed { "PASS" } else { "FAIL" };
            println!(
                "{status} clients={clients} ops={} accepted={} rejected={} rejoins={} gaps={} lost={} hash={} ops/sec={:.0}",
                report.ops_sent,
                report.accepted,
                report.rejected,
                report.rejoins,
                report.gaps_recovered,
                report.lost_frames,
                if report.final_hash.is_empty() { "-" } else { &report.final_hash[..16] },
                report.ops_per_sec()
            );
            match report.failure {
                Some(why) => Err(CliError::domain("DIVERGED", why)),
                None => Ok(()),
            }
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::domain("IO_ERROR", e))
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let default_level = match cli.command {
        Command::Serve { .. } => "info",
        _ => "warn",
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| default_level.into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
