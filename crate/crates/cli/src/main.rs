use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entsub::combinatorics::{count_distinct_monomials, to_usize};
use entsub::decompose::{
    decompose, expected_part_sizes, extract_ges_layers, max_ces_dim, max_ges_dim, max_sym_ges_dim,
    verify, Scheme,
};
use entsub::io::{from_json, to_json, DecompositionFile, StateFile};
use entsub::multirank::{format_tuple, is_gme};
use entsub::{EmbedSpec, LocalDims};
use serde_json::{json, Value};

const USAGE: u8 = 1;
const VERIFY_FAILED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "entsub",
    version,
    about = "Product, genuinely entangled and completely entangled subspaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a decomposition and write it as JSON.
    Decompose {
        /// Local dimensions, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Substitution count for homogeneous dims (default d - 2).
        #[arg(long)]
        ksub: Option<usize>,
        #[arg(long, default_value = "triangular")]
        scheme: Scheme,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the verification suite and embed its report.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        fresh: usize,
    },
    /// Print the multiranks and GME verdict of a state file.
    Multirank {
        #[arg(long)]
        state: PathBuf,
        /// Only report this bipartition size.
        #[arg(long)]
        ell: Option<usize>,
    },
    /// Re-run the verification suite on a stored decomposition.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        fresh: usize,
        /// Defaults to the seed stored in the file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print subspace dimensions and bounds for a spec.
    Counts {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        ksub: Option<usize>,
    },
    /// Print the dimensions of the GES layers of a stored decomposition.
    Layers {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

type CmdResult = Result<u8, String>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Decompose {
            dims,
            ksub,
            scheme,
            seed,
            out,
            verify,
            trials,
            fresh,
        } => cmd_decompose(
            &dims,
            ksub,
            scheme,
            seed,
            out.as_deref(),
            verify.then_some((trials, fresh)),
        ),
        Command::Multirank { state, ell } => cmd_multirank(&state, ell),
        Command::Verify {
            input,
            trials,
            fresh,
            seed,
        } => cmd_verify(&input, trials, fresh, seed),
        Command::Counts { dims, ksub } => cmd_counts(&dims, ksub),
        Command::Layers { input } => cmd_layers(&input),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(USAGE)
        }
    }
}

fn build_spec(dims: &[usize], ksub: Option<usize>) -> Result<EmbedSpec, String> {
    let dims = LocalDims::new(dims.to_vec()).map_err(|e| e.to_string())?;
    EmbedSpec::new(dims, ksub).map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_json(value: &Value) -> Result<(), String> {
    emit(&to_json(value).map_err(|e| e.to_string())?, None)
}

fn load_decomposition(path: &Path) -> Result<(DecompositionFile, entsub::Decomposition), String> {
    let file: DecompositionFile = from_json(&read(path)?).map_err(|e| e.to_string())?;
    let dec = file.to_decomposition().map_err(|e| e.to_string())?;
    Ok((file, dec))
}

fn cmd_decompose(
    dims: &[usize],
    ksub: Option<usize>,
    scheme: Scheme,
    seed: u64,
    out: Option<&Path>,
    checks: Option<(usize, usize)>,
) -> CmdResult {
    let spec = build_spec(dims, ksub)?;
    let dec = decompose(&spec, scheme, seed).map_err(|e| e.to_string())?;
    let report = checks.map(|(trials, fresh)| verify(&dec, trials, fresh, seed));
    let passed = report.as_ref().is_none_or(|r| r.passed());
    let failed = report
        .as_ref()
        .map(|r| r.failed_checks())
        .unwrap_or_default();
    let file = DecompositionFile::from_decomposition(&dec, report);
    emit(&to_json(&file).map_err(|e| e.to_string())?, out)?;
    let (p, g, c) = dec.part_sizes();
    eprintln!("{} {}: parts {p}/{g}/{c}", spec.family(), scheme);
    if passed {
        Ok(0)
    } else {
        eprintln!("verification failed: {}", failed.join(", "));
        Ok(VERIFY_FAILED)
    }
}

fn cmd_multirank(path: &Path, ell: Option<usize>) -> CmdResult {
    let file: StateFile = from_json(&read(path)?).map_err(|e| e.to_string())?;
    let psi = file.to_ket().map_err(|e| e.to_string())?;
    let report = is_gme(&psi).map_err(|e| e.to_string())?;
    let n = psi.dims().n();
    let ells: Vec<usize> = match ell {
        Some(l) if l == 0 || l > n / 2 => return Err(format!("--ell must lie in 1..={}", n / 2)),
        Some(l) => vec![l],
        None => (1..=n / 2).collect(),
    };
    let multiranks: Vec<Value> = ells
        .iter()
        .map(|&l| {
            let partitions: Vec<Value> = report.per_ell[l - 1]
                .iter()
                .map(|(part, rank)| json!({ "sites": part.to_string(), "rank": rank }))
                .collect();
            json!({ "ell": l, "ranks": format_tuple(&report.ranks(l)), "partitions": partitions })
        })
        .collect();
    print_json(&json!({
        "dims": psi.dims().as_slice(),
        "gme": report.gme,
        "multiranks": multiranks,
        "witness": report.witness().map(|p| p.to_string()),
    }))?;
    Ok(0)
}

fn cmd_verify(path: &Path, trials: usize, fresh: usize, seed: Option<u64>) -> CmdResult {
    let (file, dec) = load_decomposition(path)?;
    let report = verify(&dec, trials, fresh, seed.unwrap_or(file.seed));
    print_json(&serde_json::to_value(&report).map_err(|e| e.to_string())?)?;
    if report.passed() {
        Ok(0)
    } else {
        eprintln!("verification failed: {}", report.failed_checks().join(", "));
        Ok(VERIFY_FAILED)
    }
}

fn cmd_counts(dims: &[usize], ksub: Option<usize>) -> CmdResult {
    let spec = build_spec(dims, ksub)?;
    let (product, ges, ces) = expected_part_sizes(&spec);
    let mut sorted = dims.to_vec();
    sorted.sort_unstable();
    let err = |e: entsub::Error| e.to_string();
    let (monomials, sym) = match (spec.dims().uniform(), spec.k_sub()) {
        (Some(d), Some(k)) => (
            Some(to_usize(
                &count_distinct_monomials(dims.len(), d, k).map_err(err)?,
            )),
            Some(max_sym_ges_dim(dims.len(), d).map_err(err)?),
        ),
        _ => (None, None),
    };
    print_json(&json!({
        "dims": dims,
        "k_sub": spec.k_sub(),
        "family": spec.family().to_string(),
        "nupb_size": spec.nupb_size(),
        "distinct_monomials": monomials,
        "product_dim": product,
        "ges_dim": ges,
        "ces_dim": ces,
        "max_ces_dim": max_ces_dim(dims).map_err(err)?,
        "max_ges_dim": max_ges_dim(&sorted).map_err(err)?,
        "max_sym_ges_dim": sym,
    }))?;
    Ok(0)
}

fn cmd_layers(path: &Path) -> CmdResult {
    let (_, dec) = load_decomposition(path)?;
    let layers = extract_ges_layers(&dec).map_err(|e| e.to_string())?;
    let sizes = layers.sizes(&dec);
    print_json(&json!({
        "scheme": dec.scheme.to_string(),
        "sizes": sizes,
        "tuple": format_tuple(&sizes),
    }))?;
    Ok(0)
}
