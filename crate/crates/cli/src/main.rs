//! Command-line entry point. Thin shell over the library commands: parse
//! arguments, read ledgers from disk, write the rendered report to stdout
//! or to --out.

use clap::{Parser, Subcommand};
use htl_cli as cli;

#[derive(Parser)]
#[command(name = "htl", about = "Hybrid trace formula laboratory", version)]
struct Args {
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fundamental unit and cusp regulator of Q(sqrt(delta)).
    Field {
        #[arg(long)]
        delta: u64,
    },
    /// Enumerate classes with rho below T into a ledger.
    Ledger {
        #[arg(long)]
        delta: u64,
        #[arg(long = "T")]
        t: f64,
        #[arg(long, default_value_t = 6)]
        disc_height: i64,
        #[arg(long, default_value_t = 100.0)]
        pell_cap: f64,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Statistics reports over a saved ledger.
    Stats {
        /// Path to a ledger JSON file produced by the ledger command.
        #[arg(long)]
        ledger: std::path::PathBuf,
        /// Report: count, weyl, arcs, units, or geodesic.
        #[arg(long)]
        report: String,
        #[arg(long = "T")]
        t: Option<f64>,
        /// Arc start in turns, for the arcs report.
        #[arg(long, default_value_t = 0.0)]
        arc_start: f64,
        /// Arc end in turns, for the arcs report.
        #[arg(long, default_value_t = 0.5)]
        arc_end: f64,
    },
    /// Geometric side of the trace formula at one weight.
    Trace {
        #[arg(long)]
        ledger: std::path::PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value = "bump")]
        tf_family: String,
        #[arg(long, default_value_t = 1.0)]
        tf_a: f64,
        #[arg(long, default_value_t = 320)]
        nodes: usize,
        /// Covolume of the lattice; supplied, never computed.
        #[arg(long)]
        vol: f64,
        /// Cusp regulators; defaults to the regulator of the ledger's field.
        #[arg(long, num_args = 1..)]
        regulator: Option<Vec<f64>>,
    },
    /// Truncated partial zeta function on an s grid.
    Zeta {
        #[arg(long)]
        ledger: std::path::PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 1.2)]
        s_min: f64,
        #[arg(long, default_value_t = 3.0)]
        s_max: f64,
        #[arg(long, default_value_t = 7)]
        s_steps: usize,
        #[arg(long, default_value_t = 0.0)]
        s_im: f64,
    },
    /// Self-contained identity suites: transforms, modular, forms, pell.
    Check {
        #[arg(long)]
        suite: String,
    },
}

fn run(args: Args) -> Result<(String, bool), htl_core::error::HtlError> {
    if let Some(cap) = cli::thread_cap()? {
        // computations are sequential; the cap is validated and accepted
        let _ = cap;
    }
    match args.cmd {
        Cmd::Field { delta } => Ok((cli::cmd_field(delta)?, true)),
        Cmd::Ledger {
            delta,
            t,
            disc_height,
            pell_cap,
            format,
        } => {
            let f = cli::OutFormat::parse(&format)?;
            Ok((cli::cmd_ledger(delta, t, disc_height, pell_cap, f)?, true))
        }
        Cmd::Stats {
            ledger,
            report,
            t,
            arc_start,
            arc_end,
        } => {
            let led = cli::load_ledger(&std::fs::read_to_string(ledger)?)?;
            Ok((
                cli::cmd_stats(&led, &report, t, Some((arc_start, arc_end)))?,
                true,
            ))
        }
        Cmd::Trace {
            ledger,
            m,
            tf_family,
            tf_a,
            nodes,
            vol,
            regulator,
        } => {
            let led = cli::load_ledger(&std::fs::read_to_string(ledger)?)?;
            let tf = cli::tf_from_args(&tf_family, tf_a, nodes)?;
            Ok((cli::cmd_trace(&led, m, tf, vol, regulator)?, true))
        }
        Cmd::Zeta {
            ledger,
            m,
            s_min,
            s_max,
            s_steps,
            s_im,
        } => {
            let led = cli::load_ledger(&std::fs::read_to_string(ledger)?)?;
            let n = s_steps.max(2);
            let grid: Vec<(f64, f64)> = (0..n)
                .map(|i| {
                    (
                        s_min + (s_max - s_min) * i as f64 / (n - 1) as f64,
                        s_im,
                    )
                })
                .collect();
            Ok((cli::cmd_zeta(&led, m, &grid)?, true))
        }
        Cmd::Check { suite } => cli::cmd_check(&suite),
    }
}

fn main() {
    let args = Args::parse();
    let out_path = args.out.clone();
    match run(args) {
        Ok((text, ok)) => {
            match out_path {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, &text) {
                        eprintln!("error: {e}");
                        std::process::exit(2);
                    }
                }
                None => print!("{text}"),
            }
            if !ok {
                std::process::exit(1);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
