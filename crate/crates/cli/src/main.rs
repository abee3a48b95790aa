//! Command-line front end: configure instances, run the verification
//! pipelines, and emit machine-readable certificates and plot-ready CSV.
//!
//! Exit codes: 0 verification passed, 1 verification failed, 2 numeric or
//! configuration error. Certificates carry `schema: 1`; the `timing_ms`
//! field is the only part that varies between identical runs. Thread count
//! follows `RAYON_NUM_THREADS`.

mod cmds;
mod out;

use clap::{Parser, Subcommand};

use coarse_ponzi::Error as CoreError;

#[derive(Parser)]
#[command(name = "coarse-ponzi", version)]
#[command(about = "Verification pipelines for discrete and measured Ponzi schemes on windowed coarse spaces")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Verify the explicit scheme on the hyperbolic disk: closed-form grid,
    /// quadrature cross-check, monotone tail, effectiveness margin.
    /// Emits a certificate and optionally a CSV of
    /// `r,angle,closed_form,quadrature,residual` rows (sorted by r, angle).
    VerifyHyperbolic(cmds::VerifyHyperbolicArgs),
    /// Build the free-group ball, the parent-payment scheme, its boundary,
    /// and the effectiveness certificate.
    VerifyTree(cmds::VerifyTreeArgs),
    /// Run a conversion pipeline between measured and discrete schemes.
    Convert(cmds::ConvertArgs),
    /// Telescoping flux reports over nested windows of Z^n, with the
    /// refutation statement where it applies.
    Flux(cmds::FluxArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Commands::VerifyHyperbolic(args) => cmds::verify_hyperbolic(args),
        Commands::VerifyTree(args) => cmds::verify_tree(args),
        Commands::Convert(args) => cmds::convert(args),
        Commands::Flux(args) => cmds::flux(args),
    };
    let code = match result {
        Ok(pass) => {
            if pass {
                0
            } else {
                1
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            match err.downcast_ref::<CoreError>() {
                // precondition failures of the mathematics are verification
                // failures; everything else is a numeric/config error
                Some(
                    CoreError::NotConstantOnS { .. }
                    | CoreError::NegativeEntry { .. }
                    | CoreError::CoverageGap { .. }
                    | CoreError::NoFiniteConstant { .. },
                ) => 1,
                _ => 2,
            }
        }
    };
    std::process::exit(code);
}
