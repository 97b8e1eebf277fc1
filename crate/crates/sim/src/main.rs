use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use brain_core::perception::mock::FixtureEmotionDetector;
use brain_sim::scenario::load_face;
use brain_sim::{run_scripted, run_visit, transcript_diff, Client, LineReplies, Outcome, Scenario, Visit};
use clap::{Parser, Subcommand};

const MISMATCH: u8 = 1;
const FAILURE: u8 = 2;

/// Robot simulator for the brain service.
#[derive(Parser, Debug)]
#[command(name = "simulate", version, about)]
struct Args {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Subcommand, Debug)]
enum Mode {
    /// Chat with the brain from the terminal
    Interactive {
        /// Server address (host:port or URL)
        #[arg(long, env = "BRAIN_SERVER", default_value = "127.0.0.1:8080")]
        server: String,
        /// Face template fixture (JSON array)
        #[arg(long)]
        face: PathBuf,
        /// Emotion frame fixture posted after the questions
        #[arg(long)]
        emotions: Option<PathBuf>,
        /// Send replies as audio payloads
        #[arg(long)]
        audio: bool,
    },
    /// Replay a scenario file and print its transcript
    Scripted {
        scenario: PathBuf,
        /// Expected transcript; overrides the scenario's own
        #[arg(long)]
        expect: Option<PathBuf>,
        /// Server address (host:port or URL)
        #[arg(long, env = "BRAIN_SERVER", default_value = "127.0.0.1:8080")]
        server: String,
        /// Send replies as audio payloads
        #[arg(long)]
        audio: bool,
    },
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::from(FAILURE)
        }
    }
}

fn run(args: Args) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match args.mode {
        Mode::Interactive { server, face, emotions, audio } => {
            let visit = Visit {
                client_id: "simulator".to_string(),
                face: load_face(&face)?,
                frames: match emotions {
                    Some(path) => FixtureEmotionDetector::load(&path)?,
                    None => Vec::new(),
                },
                audio,
            };
            let client = Client::new(&server)?;
            let stdout = io::stdout();
            let mut replies = LineReplies::new(io::stdin().lock(), stdout.lock());
            let outcome = run_visit(&client, &visit, &mut replies, &mut LineFlush(stdout.lock()))?;
            if outcome == Outcome::Stopped {
                println!("[stopped]");
            }
            Ok(ExitCode::SUCCESS)
        }
        Mode::Scripted { scenario, expect, server, audio } => {
            let mut scenario = Scenario::load(&scenario)?;
            scenario.audio |= audio;
            let client = Client::new(&server)?;
            let (transcript, _) = run_scripted(&client, &scenario)?;
            print!("{transcript}");
            io::stdout().flush()?;
            let Some(expected) = expect.or(scenario.expected_transcript) else {
                return Ok(ExitCode::SUCCESS);
            };
            let expected = std::fs::read_to_string(&expected)
                .map_err(|e| format!("cannot read {}: {e}", expected.display()))?;
            match transcript_diff(&expected, &transcript) {
                None => Ok(ExitCode::SUCCESS),
                Some(diff) => {
                    eprint!("{diff}");
                    Ok(ExitCode::from(MISMATCH))
                }
            }
        }
    }
}

/// Flushes after every write so robot lines show up before the prompt.
struct LineFlush<W>(W);

impl<W: Write> Write for LineFlush<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.0.write(buf)?;
        self.0.flush()?;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.0.flush()
    }
}
