//! `msr`: build, exercise, and benchmark the access-optimal regenerating code.
//!
//! Every subcommand prints `key=value` lines by default, or one JSON object
//! with the same numbers under `--json`. Exit codes: 0 success, 1 verification
//! failure, 2 usage error, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};
use msr_code::{
    access_report, assign_coefficients, encode, extract_helper_symbols, find_c,
    repair_systematic, verify_mds, CodeParams, FieldElement, FieldSpec, NodeId, ReadCounter,
};
use msr_tool::shardio::{
    encode_file, reconstruct_file, repair_file_shard, scan_shards, write_shard, Manifest, Shard,
    ShardError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "msr", version, about = "Erasure coding with access-optimal single-shard repair")]
struct Cli {
    /// Emit one JSON object on stdout instead of key=value lines.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for code coefficients and write a manifest describing them.
    Build {
        /// Digit positions per symbol index; the code stores k = m*r data shards.
        #[arg(long)]
        m: usize,
        /// Parity shard count, also the radix of symbol indices.
        #[arg(long)]
        r: usize,
        /// Field width in bits (8 or 16).
        #[arg(long, default_value_t = 8)]
        field_bits: u8,
        /// Seed offsetting the coefficient evaluation points.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Manifest output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a file into n shards plus an updated manifest.
    Encode {
        /// Manifest from `msr build`.
        #[arg(long)]
        manifest: PathBuf,
        /// File to encode.
        #[arg(long)]
        input: PathBuf,
        /// Directory for the shards and the per-file manifest.
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Rebuild one lost data shard from the other n-1 shards.
    Repair {
        /// Per-file manifest written by `msr encode`.
        #[arg(long)]
        manifest: PathBuf,
        /// Directory holding the survivors; the rebuilt shard is written back here.
        #[arg(long)]
        shards_dir: PathBuf,
        /// Failed data shard as "s,t": digit position 1..=m, digit value 0..r.
        #[arg(long)]
        failed: Option<String>,
        /// Failed shard by node ordinal (0..n) instead of "s,t".
        #[arg(long, conflicts_with = "failed")]
        node_ordinal: Option<usize>,
    },
    /// Decode the original file from any k shards.
    Reconstruct {
        /// Per-file manifest written by `msr encode`.
        #[arg(long)]
        manifest: PathBuf,
        /// Directory holding the shards.
        #[arg(long)]
        shards_dir: PathBuf,
        /// Comma-separated node ordinals to read (default: first k found).
        #[arg(long)]
        nodes: Option<String>,
        /// Where to write the decoded file.
        #[arg(long)]
        output: PathBuf,
    },
    /// Re-check that every k-subset of the manifest's code is decodable.
    Verify {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Time in-memory repairs of random data and report symbols read.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        /// Repair trials to run, cycling through the data shards.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// RNG seed for the random messages.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Successful command output: the same numbers rendered two ways, plus an
/// exit code so `verify` can report a failing code without aborting early.
struct Report {
    human: Vec<String>,
    json: Value,
    status: u8,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn verification(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_VERIFY, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_IO, message: message.into() }
    }
}

/// Core-library errors that stem from bad flags are usage errors; the rest
/// mean some verification or consistency check failed.
fn code_err(e: msr_code::Error) -> Failure {
    use msr_code::Error as E;
    match e {
        E::UnsupportedFieldWidth { .. }
        | E::BadPolynomialDegree { .. }
        | E::ReduciblePolynomial { .. }
        | E::BadParameters(_)
        | E::FieldTooSmall { .. }
        | E::BadNode(_)
        | E::DigitOutOfRange { .. }
        | E::ParityRepairUnsupported => Failure::usage(e.to_string()),
        other => Failure::verification(other.to_string()),
    }
}

fn io_err(e: ShardError) -> Failure {
    match e {
        ShardError::Code(inner) => code_err(inner),
        other => Failure::io(other.to_string()),
    }
}

fn file_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::io(format!("{}: {e}", path.display()))
}

/// Rounds to `places` decimals so the human and JSON outputs print the same
/// short number.
fn round_to(v: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (v * scale).round() / scale
}

fn elapsed_ms(start: Instant) -> f64 {
    round_to(start.elapsed().as_secs_f64() * 1e3, 3)
}

fn load_manifest(path: &Path) -> Result<Manifest, Failure> {
    Manifest::load(path).map_err(io_err)
}

fn parse_failed(
    failed: &Option<String>,
    node_ordinal: Option<usize>,
    params: &CodeParams,
) -> Result<NodeId, Failure> {
    let id = match (failed, node_ordinal) {
        (Some(st), None) => {
            let (s, t) = st
                .split_once(',')
                .ok_or_else(|| Failure::usage(format!("--failed wants \"s,t\", got \"{st}\"")))?;
            let s: usize = s
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("--failed: bad digit position \"{s}\"")))?;
            let t: u8 = t
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("--failed: bad digit value \"{t}\"")))?;
            NodeId::systematic(s, t, params).map_err(code_err)?
        }
        (None, Some(ord)) => {
            if ord >= params.n {
                return Err(Failure::usage(format!(
                    "--node-ordinal {ord} is out of range; this code has {} shards",
                    params.n
                )));
            }
            NodeId::from_ordinal(ord, params).map_err(code_err)?
        }
        (None, None) => return Err(Failure::usage("pass --failed s,t or --node-ordinal")),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    if !id.is_systematic() {
        return Err(Failure::usage(format!(
            "node {} is a parity shard; repair covers data shards only — re-encode or reconstruct instead",
            id.ordinal(params)
        )));
    }
    Ok(id)
}

fn parse_nodes(list: &str, params: &CodeParams) -> Result<Vec<usize>, Failure> {
    let mut nodes = Vec::new();
    for part in list.split(',') {
        let ord: usize = part
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("--nodes: bad ordinal \"{part}\"")))?;
        if ord >= params.n {
            return Err(Failure::usage(format!(
                "--nodes: ordinal {ord} is out of range; this code has {} shards",
                params.n
            )));
        }
        if nodes.contains(&ord) {
            return Err(Failure::usage(format!("--nodes: ordinal {ord} repeats")));
        }
        nodes.push(ord);
    }
    Ok(nodes)
}

fn cmd_build(m: usize, r: usize, field_bits: u8, seed: u64, out: &Path) -> Result<Report, Failure> {
    let spec = FieldSpec::new(field_bits).map_err(code_err)?;
    let params = CodeParams::validate(m, r, spec).map_err(code_err)?;
    let start = Instant::now();
    let desc = assign_coefficients(&params, seed).map_err(code_err)?;
    let search = find_c(&desc).map_err(|e| match e {
        msr_code::Error::CoefficientNotFound { order, bound } => {
            let detail = match bound {
                Some(b) => format!(
                    "field order {order} is below the existence bound {b} = C({},{}) * {}^{}",
                    params.n,
                    params.k,
                    params.r,
                    params.m + 1
                ),
                None => format!("the existence bound overflows u128, far beyond field order {order}"),
            };
            Failure::verification(format!(
                "no common coefficient passes every subset: {detail}; retry with --field-bits 16 or another --seed"
            ))
        }
        other => code_err(other),
    })?;
    let desc = desc.with_c(search.c).map_err(code_err)?;
    let mds = verify_mds(&desc).map_err(code_err)?;
    if !mds.is_ok() {
        return Err(Failure::verification(format!(
            "{} of {} subsets are singular even after the search succeeded; this is a bug",
            mds.failing.len(),
            mds.subsets_checked
        )));
    }
    let ms = elapsed_ms(start);
    let manifest = Manifest::from_description(&desc).map_err(io_err)?;
    manifest.write(out).map_err(io_err)?;

    if params.below_bound {
        let bound = params
            .coefficient_bound()
            .map_or_else(|| "the u128 limit".to_string(), |b| b.to_string());
        eprintln!(
            "warning: field order {} is below the sufficient bound {bound}; \
             the search still succeeded for seed {seed}, but other seeds may fail",
            spec.order()
        );
    }

    Ok(Report {
        human: vec![
            format!(
                "n={} k={} d={} alpha={} beta={} field_bits={field_bits}",
                params.n, params.k, params.d, params.alpha, params.beta
            ),
            format!("c={} rejected={}", search.c, search.rejected),
            format!("subsets_checked={}", mds.subsets_checked),
            format!("below_bound={}", params.below_bound),
            format!("elapsed_ms={ms}"),
            format!("manifest={}", out.display()),
        ],
        json: json!({
            "command": "build",
            "m": m, "r": r, "n": params.n, "k": params.k, "d": params.d,
            "alpha": params.alpha, "beta": params.beta,
            "field_bits": field_bits, "seed": seed,
            "c": search.c, "rejected": search.rejected,
            "subsets_checked": mds.subsets_checked,
            "below_bound": params.below_bound,
            "elapsed_ms": ms,
            "manifest": out.display().to_string(),
        }),
        status: 0,
    })
}

fn cmd_encode(manifest_path: &Path, input: &Path, outdir: &Path) -> Result<Report, Failure> {
    let manifest = load_manifest(manifest_path)?;
    let desc = manifest.description().map_err(io_err)?;
    let bytes = std::fs::read(input).map_err(|e| file_err(input, e))?;

    let start = Instant::now();
    let encoded = encode_file(&desc, &bytes).map_err(io_err)?;
    std::fs::create_dir_all(outdir).map_err(|e| file_err(outdir, e))?;
    for shard in &encoded.shards {
        write_shard(outdir, shard).map_err(io_err)?;
    }
    let file_manifest = outdir.join("manifest.txt");
    encoded.manifest.write(&file_manifest).map_err(io_err)?;
    let ms = elapsed_ms(start);

    let params = desc.params();
    let shard_bytes = encoded.shards.first().map_or(0, |s| s.to_bytes().len());
    Ok(Report {
        human: vec![
            format!("file_length={}", encoded.manifest.file_length),
            format!(
                "stripes={} padding={}",
                encoded.manifest.stripe_count, encoded.manifest.padding
            ),
            format!("shards={} shard_bytes={shard_bytes}", params.n),
            format!("elapsed_ms={ms}"),
            format!("manifest={}", file_manifest.display()),
        ],
        json: json!({
            "command": "encode",
            "file_length": encoded.manifest.file_length,
            "stripes": encoded.manifest.stripe_count,
            "padding": encoded.manifest.padding,
            "shards": params.n,
            "shard_bytes": shard_bytes,
            "elapsed_ms": ms,
            "manifest": file_manifest.display().to_string(),
        }),
        status: 0,
    })
}

fn cmd_repair(
    manifest_path: &Path,
    shards_dir: &Path,
    failed: &Option<String>,
    node_ordinal: Option<usize>,
) -> Result<Report, Failure> {
    let manifest = load_manifest(manifest_path)?;
    let desc = manifest.description().map_err(io_err)?;
    let params = desc.params();
    let failed = parse_failed(failed, node_ordinal, params)?;
    let failed_ord = failed.ordinal(params);

    let mut survivors = scan_shards(shards_dir).map_err(io_err)?;
    survivors.remove(&failed_ord); // repair from the others even if a stale copy remains

    let start = Instant::now();
    let (shard, stats) = repair_file_shard(&desc, &manifest, &survivors, failed).map_err(|e| {
        match e {
            ShardError::MissingShard { .. } => Failure::verification(format!(
                "{e}; run `msr reconstruct` to recover the file instead"
            )),
            other => io_err(other),
        }
    })?;
    if let Some(&expected) = manifest.shard_crcs.get(failed_ord) {
        let got = shard.crc();
        if got != expected {
            return Err(Failure::verification(format!(
                "repaired shard checksum {got:#010x} does not match the manifest's {expected:#010x}"
            )));
        }
    }
    let path = write_shard(shards_dir, &shard).map_err(io_err)?;
    let ms = elapsed_ms(start);

    let ratio = round_to(stats.total_per_stripe as f64 / stats.baseline_per_stripe as f64, 4);
    let (s, t) = match failed {
        NodeId::Systematic { s, t } => (s, t),
        NodeId::Parity { .. } => unreachable!("parse_failed rejects parity shards"),
    };
    Ok(Report {
        human: vec![
            format!("repaired={failed_ord} s={s} t={t}"),
            format!("helpers={} per_helper={}", stats.helpers, stats.per_helper),
            format!(
                "total={} baseline={} ratio={ratio}",
                stats.total_per_stripe, stats.baseline_per_stripe
            ),
            format!("stripes={} symbols_read={}", stats.stripes, stats.symbols_read),
            format!("elapsed_ms={ms}"),
            format!("shard={}", path.display()),
        ],
        json: json!({
            "command": "repair",
            "repaired": failed_ord, "s": s, "t": t,
            "helpers": stats.helpers, "per_helper": stats.per_helper,
            "total": stats.total_per_stripe, "baseline": stats.baseline_per_stripe,
            "ratio": ratio,
            "stripes": stats.stripes, "symbols_read": stats.symbols_read,
            "elapsed_ms": ms,
            "shard": path.display().to_string(),
        }),
        status: 0,
    })
}

fn cmd_reconstruct(
    manifest_path: &Path,
    shards_dir: &Path,
    nodes: &Option<String>,
    output: &Path,
) -> Result<Report, Failure> {
    let manifest = load_manifest(manifest_path)?;
    let desc = manifest.description().map_err(io_err)?;
    let params = desc.params();
    let found = scan_shards(shards_dir).map_err(io_err)?;

    let chosen: Vec<&Shard> = match nodes {
        Some(list) => {
            let ordinals = parse_nodes(list, params)?;
            if ordinals.len() != params.k {
                return Err(Failure::usage(format!(
                    "--nodes wants exactly k={} ordinals, got {}",
                    params.k,
                    ordinals.len()
                )));
            }
            ordinals
                .iter()
                .map(|ord| {
                    found.get(ord).ok_or_else(|| {
                        Failure::verification(format!(
                            "shard for node {ord} is not in {}",
                            shards_dir.display()
                        ))
                    })
                })
                .collect::<Result<_, _>>()?
        }
        None => {
            if found.len() < params.k {
                return Err(Failure::verification(format!(
                    "only {} shards in {}, need any {}",
                    found.len(),
                    shards_dir.display(),
                    params.k
                )));
            }
            found.values().take(params.k).collect()
        }
    };
    let used: Vec<usize> = chosen.iter().map(|s| usize::from(s.node)).collect();

    let start = Instant::now();
    let bytes = reconstruct_file(&desc, &manifest, &chosen).map_err(io_err)?;
    std::fs::write(output, &bytes).map_err(|e| file_err(output, e))?;
    let ms = elapsed_ms(start);

    Ok(Report {
        human: vec![
            format!("file_length={}", bytes.len()),
            format!(
                "nodes={}",
                used.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
            ),
            format!("elapsed_ms={ms}"),
            format!("output={}", output.display()),
        ],
        json: json!({
            "command": "reconstruct",
            "file_length": bytes.len(),
            "nodes": used,
            "elapsed_ms": ms,
            "output": output.display().to_string(),
        }),
        status: 0,
    })
}

fn cmd_verify(manifest_path: &Path) -> Result<Report, Failure> {
    let manifest = load_manifest(manifest_path)?;
    let desc = manifest.description().map_err(io_err)?;
    let params = desc.params();

    let start = Instant::now();
    let mds = verify_mds(&desc).map_err(code_err)?;
    let ms = elapsed_ms(start);

    let ok = mds.is_ok();
    let c = desc.c_required().map_err(code_err)?;
    let mut human = vec![
        format!("n={} k={} field_bits={} c={c}", params.n, params.k, params.field.bits),
        format!("subsets_checked={} failing={}", mds.subsets_checked, mds.failing.len()),
        format!("ok={ok}"),
        format!("elapsed_ms={ms}"),
    ];
    if !ok {
        for subset in mds.failing.iter().take(5) {
            human.push(format!(
                "singular_subset={}",
                subset.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
            ));
        }
    }
    Ok(Report {
        human,
        json: json!({
            "command": "verify",
            "n": params.n, "k": params.k, "field_bits": params.field.bits, "c": c,
            "subsets_checked": mds.subsets_checked,
            "failing": mds.failing.len(),
            "singular_subsets": mds.failing,
            "ok": ok,
            "elapsed_ms": ms,
        }),
        status: if ok { 0 } else { EXIT_VERIFY },
    })
}

fn cmd_bench(manifest_path: &Path, trials: usize, seed: u64) -> Result<Report, Failure> {
    if trials == 0 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let manifest = load_manifest(manifest_path)?;
    let desc = manifest.description().map_err(io_err)?;
    let params = desc.params();
    let order = u64::from(params.field.order());

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total_reads = 0usize;
    let mut repair_time = Duration::ZERO;
    for trial in 0..trials {
        let message: Vec<Vec<FieldElement>> = (0..params.k)
            .map(|_| {
                (0..params.alpha)
                    .map(|_| rng.random_range(0..order) as FieldElement)
                    .collect()
            })
            .collect();
        let codeword = encode(&message, &desc).map_err(code_err)?;
        let failed = NodeId::from_ordinal(trial % params.k, params).map_err(code_err)?;

        let t = Instant::now();
        let mut counter = ReadCounter::new(params.n);
        let helpers = extract_helper_symbols(&codeword, failed, &mut counter).map_err(code_err)?;
        let repaired = repair_systematic(failed, &helpers, &desc).map_err(code_err)?;
        repair_time += t.elapsed();

        if repaired != codeword.node(failed.ordinal(params)) {
            return Err(Failure::verification(format!(
                "trial {trial}: repaired shard differs from the original"
            )));
        }
        total_reads += counter.total();
    }
    let ms = elapsed_ms(start);

    let baseline = access_report(NodeId::from_ordinal(0, params).map_err(code_err)?, params)
        .map_err(code_err)?
        .baseline;
    let mean_reads = round_to(total_reads as f64 / trials as f64, 4);
    let ratio = round_to(mean_reads / baseline as f64, 4);
    let mean_repair_us = round_to(repair_time.as_secs_f64() * 1e6 / trials as f64, 3);
    Ok(Report {
        human: vec![
            format!("trials={trials} seed={seed}"),
            format!("mean_symbols_read={mean_reads} baseline={baseline} ratio={ratio}"),
            format!("mean_repair_us={mean_repair_us}"),
            format!("elapsed_ms={ms}"),
        ],
        json: json!({
            "command": "bench",
            "trials": trials, "seed": seed,
            "mean_symbols_read": mean_reads,
            "baseline": baseline,
            "ratio": ratio,
            "mean_repair_us": mean_repair_us,
            "elapsed_ms": ms,
        }),
        status: 0,
    })
}

fn run(command: &Command) -> Result<Report, Failure> {
    match command {
        Command::Build { m, r, field_bits, seed, out } => {
            cmd_build(*m, *r, *field_bits, *seed, out)
        }
        Command::Encode { manifest, input, outdir } => cmd_encode(manifest, input, outdir),
        Command::Repair { manifest, shards_dir, failed, node_ordinal } => {
            cmd_repair(manifest, shards_dir, failed, *node_ordinal)
        }
        Command::Reconstruct { manifest, shards_dir, nodes, output } => {
            cmd_reconstruct(manifest, shards_dir, nodes, output)
        }
        Command::Verify { manifest } => cmd_verify(manifest),
        Command::Bench { manifest, trials, seed } => cmd_bench(manifest, *trials, *seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(report) => {
            if cli.json {
                println!("{}", report.json);
            } else {
                for line in &report.human {
                    println!("{line}");
                }
            }
            ExitCode::from(report.status)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            if cli.json {
                println!("{}", json!({ "error": failure.message, "exit": failure.code }));
            }
            ExitCode::from(failure.code)
        }
    }
}
