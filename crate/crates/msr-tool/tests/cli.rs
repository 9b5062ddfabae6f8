//! Process-level tests of the `msr` binary: subcommand behavior, exit codes,
//! and agreement between the human and JSON output modes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn msr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msr"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn msr")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

/// Finds `key=value` in key=value-style output and returns the value.
fn kv(text: &str, key: &str) -> String {
    let pat = format!("{key}=");
    for token in text.split_whitespace() {
        if let Some(v) = token.strip_prefix(&pat) {
            return v.to_string();
        }
    }
    panic!("no `{key}=` in output:\n{text}");
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("stdout is one JSON object")
}

/// A built (6,4) manifest plus an encoded 10 KiB file in `shards/`.
struct Workbench {
    dir: TempDir,
    input: Vec<u8>,
}

impl Workbench {
    fn new() -> Workbench {
        let dir = tempfile::tempdir().unwrap();
        let built = msr(dir.path(), &[
            "build", "--m", "2", "--r", "2", "--field-bits", "8", "--seed", "0", "--out",
            "code.manifest",
        ]);
        assert_eq!(exit_code(&built), 0, "{}", stderr(&built));

        let input: Vec<u8> = (0..10_240u32).map(|i| (i * 31 + 7) as u8).collect();
        std::fs::write(dir.path().join("input.bin"), &input).unwrap();
        let encoded = msr(dir.path(), &[
            "encode", "--manifest", "code.manifest", "--input", "input.bin", "--outdir", "shards",
        ]);
        assert_eq!(exit_code(&encoded), 0, "{}", stderr(&encoded));
        Workbench { dir, input }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn shard(&self, node: usize) -> PathBuf {
        self.path().join(format!("shards/shard_{node:03}.msr"))
    }
}

#[test]
fn build_reports_the_search_and_writes_a_loadable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = msr(dir.path(), &[
        "build", "--m", "2", "--r", "2", "--field-bits", "8", "--out", "code.manifest",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(kv(&text, "c"), "1");
    assert_eq!(kv(&text, "subsets_checked"), "15");
    assert_eq!(kv(&text, "below_bound"), "false");

    let manifest =
        msr_tool::shardio::Manifest::load(&dir.path().join("code.manifest")).unwrap();
    assert_eq!((manifest.m, manifest.r, manifest.c), (2, 2, 1));
    manifest.description().unwrap();
}

#[test]
fn json_and_human_outputs_carry_the_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let human = msr(dir.path(), &[
        "build", "--m", "2", "--r", "3", "--field-bits", "16", "--out", "a.manifest",
    ]);
    let machine = msr(dir.path(), &[
        "--json", "build", "--m", "2", "--r", "3", "--field-bits", "16", "--out", "b.manifest",
    ]);
    assert_eq!(exit_code(&human), 0);
    assert_eq!(exit_code(&machine), 0);

    let text = stdout(&human);
    let v = json(&machine);
    for key in ["n", "k", "d", "alpha", "beta", "c", "rejected", "subsets_checked"] {
        assert_eq!(
            kv(&text, key),
            v[key].to_string(),
            "human and JSON disagree on {key}"
        );
    }
    assert_eq!(kv(&text, "below_bound"), v["below_bound"].to_string());
}

#[test]
fn repair_prints_the_access_report_and_restores_the_shard() {
    let bench = Workbench::new();
    let original = std::fs::read(bench.shard(2)).unwrap();
    std::fs::remove_file(bench.shard(2)).unwrap();

    let out = msr(bench.path(), &[
        "repair", "--manifest", "shards/manifest.txt", "--shards-dir", "shards", "--failed",
        "2,0",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("total=10 baseline=16 ratio=0.625"),
        "unexpected report:\n{text}"
    );
    assert_eq!(kv(&text, "repaired"), "2");
    assert_eq!(kv(&text, "helpers"), "5");
    assert_eq!(kv(&text, "per_helper"), "2");
    assert_eq!(std::fs::read(bench.shard(2)).unwrap(), original);
}

#[test]
fn repair_json_matches_the_human_numbers() {
    let bench = Workbench::new();
    std::fs::remove_file(bench.shard(1)).unwrap();
    let out = msr(bench.path(), &[
        "--json", "repair", "--manifest", "shards/manifest.txt", "--shards-dir", "shards",
        "--node-ordinal", "1",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["total"], 10);
    assert_eq!(v["baseline"], 16);
    assert_eq!(v["ratio"], 0.625);
    assert_eq!(v["s"], 1);
    assert_eq!(v["t"], 1);
    let stripes = v["stripes"].as_u64().unwrap();
    assert_eq!(v["symbols_read"].as_u64().unwrap(), 10 * stripes);
}

#[test]
fn reconstruct_rebuilds_the_file_from_any_k_shards() {
    let bench = Workbench::new();
    std::fs::remove_file(bench.shard(3)).unwrap();

    let explicit = msr(bench.path(), &[
        "reconstruct", "--manifest", "shards/manifest.txt", "--shards-dir", "shards", "--nodes",
        "1,2,4,5", "--output", "explicit.bin",
    ]);
    assert_eq!(exit_code(&explicit), 0, "{}", stderr(&explicit));
    assert_eq!(std::fs::read(bench.path().join("explicit.bin")).unwrap(), bench.input);

    let default = msr(bench.path(), &[
        "reconstruct", "--manifest", "shards/manifest.txt", "--shards-dir", "shards",
        "--output", "default.bin",
    ]);
    assert_eq!(exit_code(&default), 0, "{}", stderr(&default));
    assert_eq!(std::fs::read(bench.path().join("default.bin")).unwrap(), bench.input);
}

#[test]
fn missing_helper_fails_repair_and_suggests_reconstruct() {
    let bench = Workbench::new();
    std::fs::remove_file(bench.shard(0)).unwrap();
    std::fs::remove_file(bench.shard(4)).unwrap();

    let out = msr(bench.path(), &[
        "repair", "--manifest", "shards/manifest.txt", "--shards-dir", "shards", "--failed",
        "1,0",
    ]);
    assert_eq!(exit_code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("reconstruct"), "no fallback hint in: {err}");
}

#[test]
fn usage_errors_exit_with_two() {
    let bench = Workbench::new();
    let parity = msr(bench.path(), &[
        "repair", "--manifest", "shards/manifest.txt", "--shards-dir", "shards",
        "--node-ordinal", "5",
    ]);
    assert_eq!(exit_code(&parity), 2);
    assert!(stderr(&parity).contains("parity"));

    let malformed = msr(bench.path(), &[
        "repair", "--manifest", "shards/manifest.txt", "--shards-dir", "shards", "--failed", "2",
    ]);
    assert_eq!(exit_code(&malformed), 2);

    let bad_s = msr(bench.path(), &[
        "repair", "--manifest", "shards/manifest.txt", "--shards-dir", "shards", "--failed",
        "0,0",
    ]);
    assert_eq!(exit_code(&bad_s), 2);

    let both = msr(bench.path(), &[
        "repair", "--manifest", "shards/manifest.txt", "--shards-dir", "shards", "--failed",
        "1,0", "--node-ordinal", "2",
    ]);
    assert_eq!(exit_code(&both), 2);

    let neither = msr(bench.path(), &[
        "repair", "--manifest", "shards/manifest.txt", "--shards-dir", "shards",
    ]);
    assert_eq!(exit_code(&neither), 2);

    let zero_trials =
        msr(bench.path(), &["bench", "--manifest", "code.manifest", "--trials", "0"]);
    assert_eq!(exit_code(&zero_trials), 2);
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing_manifest = msr(dir.path(), &["verify", "--manifest", "nope.manifest"]);
    assert_eq!(exit_code(&missing_manifest), 3);

    let bench = Workbench::new();
    let missing_input = msr(bench.path(), &[
        "encode", "--manifest", "code.manifest", "--input", "nope.bin", "--outdir", "x",
    ]);
    assert_eq!(exit_code(&missing_input), 3);

    // Flip one payload byte; the shard's own CRC no longer matches.
    let path = bench.shard(2);
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    let corrupted = msr(bench.path(), &[
        "reconstruct", "--manifest", "shards/manifest.txt", "--shards-dir", "shards", "--nodes",
        "0,1,2,3", "--output", "out.bin",
    ]);
    assert_eq!(exit_code(&corrupted), 3);
    assert!(stderr(&corrupted).contains("checksum"), "{}", stderr(&corrupted));
}

#[test]
fn verify_flags_a_tampered_coefficient() {
    let bench = Workbench::new();
    let path = bench.path().join("code.manifest");
    let text = std::fs::read_to_string(&path).unwrap();
    // c = 123 is one of the two values this code's search rejects.
    let tampered = text.replace("\nc: 0x1\n", "\nc: 0x7b\n");
    assert_ne!(tampered, text);
    std::fs::write(&path, tampered).unwrap();

    let human = msr(bench.path(), &["verify", "--manifest", "code.manifest"]);
    assert_eq!(exit_code(&human), 1);
    let out = stdout(&human);
    assert_eq!(kv(&out, "ok"), "false");
    assert_eq!(kv(&out, "failing"), "1");
    assert_eq!(kv(&out, "singular_subset"), "2,3,4,5");

    let machine = msr(bench.path(), &["--json", "verify", "--manifest", "code.manifest"]);
    assert_eq!(exit_code(&machine), 1);
    let v = json(&machine);
    assert_eq!(v["ok"], false);
    assert_eq!(v["singular_subsets"], serde_json::json!([[2, 3, 4, 5]]));
}

#[test]
fn verify_passes_a_fresh_manifest() {
    let bench = Workbench::new();
    let out = msr(bench.path(), &["verify", "--manifest", "code.manifest"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(kv(&text, "ok"), "true");
    assert_eq!(kv(&text, "failing"), "0");
}

#[test]
fn sub_bound_build_warns_but_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = msr(dir.path(), &[
        "build", "--m", "2", "--r", "3", "--field-bits", "8", "--out", "small.manifest",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert_eq!(kv(&stdout(&out), "below_bound"), "true");
    assert_eq!(kv(&stdout(&out), "subsets_checked"), "84");
    assert!(stderr(&out).contains("below the sufficient bound"), "{}", stderr(&out));
}

#[test]
fn bench_reports_the_expected_read_counts() {
    let bench = Workbench::new();
    let out = msr(bench.path(), &[
        "--json", "bench", "--manifest", "code.manifest", "--trials", "12", "--seed", "3",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["mean_symbols_read"], 10.0);
    assert_eq!(v["baseline"], 16);
    assert_eq!(v["ratio"], 0.625);
    assert_eq!(v["trials"], 12);
}

#[test]
fn reconstruct_with_too_few_shards_fails() {
    let bench = Workbench::new();
    for node in [0, 1, 5] {
        std::fs::remove_file(bench.shard(node)).unwrap();
    }
    let out = msr(bench.path(), &[
        "reconstruct", "--manifest", "shards/manifest.txt", "--shards-dir", "shards",
        "--output", "out.bin",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("need any 4"), "{}", stderr(&out));
}
