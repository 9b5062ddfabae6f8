//! Bit-exact persistence of code descriptions, node shards, and manifests.
//!
//! A shard file is `magic "MSRA" | version u16 LE | node ordinal u16 LE |
//! payload | crc32 u32 LE`, where the payload concatenates the node's
//! `alpha` symbols per stripe in stripe order, each symbol little-endian
//! (one byte for the 8-bit field, two for the 16-bit field). The CRC (IEEE)
//! covers the payload only and detects corruption; correcting a corrupted
//! shard is out of scope — delete it and repair.
//!
//! The manifest is a flat `key: value` text file carrying everything needed
//! to rebuild the `CodeDescription` without rerunning the construction:
//! field, parameters, seed, the full coefficient table, the common repair
//! coefficient, plus file length, stripe count, padding, and per-shard CRCs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use msr_code::{
    encode, repair_systematic, CodeDescription, CodeParams, FieldElement, FieldSpec,
    HelperSymbols, NodeId, ReadCounter, SubsetDecoder,
};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"MSRA";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 8;
const TRAILER_LEN: usize = 4;

#[derive(Debug, Error)]
pub enum ShardError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: not a shard file (bad magic)", .path.display())]
    BadMagic { path: PathBuf },
    #[error("{}: unsupported shard version {version}", .path.display())]
    BadVersion { path: PathBuf, version: u16 },
    #[error("{}: checksum mismatch (stored {stored:#010x}, computed {computed:#010x})",
            .path.display())]
    Checksum { path: PathBuf, stored: u32, computed: u32 },
    #[error("shard for node {node}: payload is {found} bytes, expected {expected}")]
    Length { node: usize, expected: usize, found: usize },
    #[error("two shards claim node {node}")]
    DuplicateShard { node: usize },
    #[error("missing shard for node {node}; any {k} shards can still reconstruct the file")]
    MissingShard { node: usize, k: usize },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("manifest is missing key `{0}`")]
    MissingKey(&'static str),
    #[error(transparent)]
    Code(#[from] msr_code::Error),
}

pub type Result<T> = std::result::Result<T, ShardError>;

fn io_err(path: &Path, source: std::io::Error) -> ShardError {
    ShardError::Io { path: path.to_path_buf(), source }
}

/// One node's persisted symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard {
    pub node: u16,
    pub payload: Vec<u8>,
}

impl Shard {
    pub fn crc(&self) -> u32 {
        crc32fast::hash(&self.payload)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len() + TRAILER_LEN);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.node.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.crc().to_le_bytes());
        out
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Shard> {
        if bytes.len() < HEADER_LEN + TRAILER_LEN || bytes[..4] != MAGIC {
            return Err(ShardError::BadMagic { path: path.to_path_buf() });
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(ShardError::BadVersion { path: path.to_path_buf(), version });
        }
        let node = u16::from_le_bytes([bytes[6], bytes[7]]);
        let payload = bytes[HEADER_LEN..bytes.len() - TRAILER_LEN].to_vec();
        let stored = u32::from_le_bytes(bytes[bytes.len() - TRAILER_LEN..].try_into().unwrap());
        let shard = Shard { node, payload };
        let computed = shard.crc();
        if stored != computed {
            return Err(ShardError::Checksum { path: path.to_path_buf(), stored, computed });
        }
        Ok(shard)
    }
}

/// Canonical file name for a node's shard.
pub fn shard_file_name(node: usize) -> String {
    format!("shard_{node:03}.msr")
}

/// Writes bytes atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// Writes one shard under its canonical name; returns the path.
pub fn write_shard(dir: &Path, shard: &Shard) -> Result<PathBuf> {
    let path = dir.join(shard_file_name(usize::from(shard.node)));
    write_atomic(&path, &shard.to_bytes())?;
    Ok(path)
}

/// Loads and checksum-validates one shard.
pub fn load_shard(path: &Path) -> Result<Shard> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Shard::from_bytes(path, &bytes)
}

/// Loads every `shard_*.msr` in a directory, indexed by node ordinal.
pub fn scan_shards(dir: &Path) -> Result<BTreeMap<usize, Shard>> {
    let mut found = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if !name.starts_with("shard_") || !name.ends_with(".msr") {
            continue;
        }
        let shard = load_shard(&entry.path())?;
        let node = usize::from(shard.node);
        if found.insert(node, shard).is_some() {
            return Err(ShardError::DuplicateShard { node });
        }
    }
    Ok(found)
}

/// Everything needed to decode shards without rerunning the construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub field_bits: u8,
    pub field_poly: u32,
    pub m: usize,
    pub r: usize,
    pub seed: u64,
    /// `a[x][u]`, row per parity.
    pub coefficients: Vec<Vec<FieldElement>>,
    pub c: FieldElement,
    pub file_length: u64,
    pub stripe_count: u64,
    /// Zero bytes appended to fill the final stripe.
    pub padding: u64,
    /// Payload CRC per node ordinal; empty until a file is encoded.
    pub shard_crcs: Vec<u32>,
}

impl Manifest {
    pub fn from_description(desc: &CodeDescription) -> Result<Manifest> {
        let params = desc.params();
        Ok(Manifest {
            field_bits: params.field.bits,
            field_poly: params.field.poly,
            m: params.m,
            r: params.r,
            seed: desc.seed(),
            coefficients: desc.coefficients().to_vec(),
            c: desc.c_required()?,
            file_length: 0,
            stripe_count: 0,
            padding: 0,
            shard_crcs: Vec::new(),
        })
    }

    pub fn params(&self) -> Result<CodeParams> {
        let spec = FieldSpec::with_polynomial(self.field_bits, self.field_poly)?;
        Ok(CodeParams::validate(self.m, self.r, spec)?)
    }

    /// Rebuilds the code description from the stored coefficients.
    pub fn description(&self) -> Result<CodeDescription> {
        let params = self.params()?;
        Ok(CodeDescription::from_parts(
            params,
            self.seed,
            self.coefficients.clone(),
            Some(self.c),
        )?)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(": ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("version", "1".into());
        kv("field_bits", self.field_bits.to_string());
        kv("field_poly", format!("{:#x}", self.field_poly));
        kv("m", self.m.to_string());
        kv("r", self.r.to_string());
        kv("seed", self.seed.to_string());
        kv("c", format!("{:#x}", self.c));
        for (x, row) in self.coefficients.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:#x}")).collect();
            kv(&format!("a_{x}"), cells.join(" "));
        }
        kv("file_length", self.file_length.to_string());
        kv("stripe_count", self.stripe_count.to_string());
        kv("padding", self.padding.to_string());
        for (node, crc) in self.shard_crcs.iter().enumerate() {
            kv(&format!("shard_crc_{node}"), format!("{crc:#010x}"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        let mut rows: BTreeMap<usize, &str> = BTreeMap::new();
        let mut crcs: BTreeMap<usize, &str> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ShardError::Manifest { line: i + 1, message };
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| err("expected `key: value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(x) = key.strip_prefix("a_") {
                let x: usize =
                    x.parse().map_err(|_| err(format!("bad coefficient row `{key}`")))?;
                if rows.insert(x, value).is_some() {
                    return Err(err(format!("duplicate key `{key}`")));
                }
            } else if let Some(node) = key.strip_prefix("shard_crc_") {
                let node: usize =
                    node.parse().map_err(|_| err(format!("bad shard index `{key}`")))?;
                if crcs.insert(node, value).is_some() {
                    return Err(err(format!("duplicate key `{key}`")));
                }
            } else if map.insert(key, value).is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
        }

        fn get<'a>(
            map: &BTreeMap<&str, &'a str>,
            key: &'static str,
        ) -> Result<&'a str> {
            map.get(key).copied().ok_or(ShardError::MissingKey(key))
        }
        fn num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T> {
            v.parse().map_err(|_| ShardError::Manifest {
                line: 0,
                message: format!("key `{key}`: cannot parse `{v}`"),
            })
        }
        fn hex(key: &str, v: &str, max: u64) -> Result<u64> {
            let digits = v.strip_prefix("0x").unwrap_or(v);
            let n = u64::from_str_radix(digits, 16).map_err(|_| ShardError::Manifest {
                line: 0,
                message: format!("key `{key}`: bad hex value `{v}`"),
            })?;
            if n > max {
                return Err(ShardError::Manifest {
                    line: 0,
                    message: format!("key `{key}`: value {v} out of range"),
                });
            }
            Ok(n)
        }

        let version: u32 = num("version", get(&map, "version")?)?;
        if version != 1 {
            return Err(ShardError::Manifest {
                line: 0,
                message: format!("unsupported manifest version {version}"),
            });
        }
        let field_bits: u8 = num("field_bits", get(&map, "field_bits")?)?;
        let field_poly =
            hex("field_poly", get(&map, "field_poly")?, u64::from(u32::MAX))? as u32;
        let m: usize = num("m", get(&map, "m")?)?;
        let r: usize = num("r", get(&map, "r")?)?;
        let seed: u64 = num("seed", get(&map, "seed")?)?;
        let c = hex("c", get(&map, "c")?, u64::from(u16::MAX))? as FieldElement;

        let mut coefficients = Vec::with_capacity(r);
        for x in 0..r {
            let row = rows.remove(&x).ok_or(ShardError::MissingKey("a_<x>"))?;
            let mut cells = Vec::new();
            for tok in row.split_whitespace() {
                cells.push(hex("a", tok, u64::from(u16::MAX))? as FieldElement);
            }
            coefficients.push(cells);
        }
        if let Some((&x, _)) = rows.iter().next() {
            return Err(ShardError::Manifest {
                line: 0,
                message: format!("coefficient row a_{x} is out of range (r = {r})"),
            });
        }

        let mut shard_crcs = Vec::with_capacity(crcs.len());
        for (expect, (&node, &v)) in crcs.iter().enumerate() {
            if node != expect {
                return Err(ShardError::Manifest {
                    line: 0,
                    message: format!("shard crc list has a gap at node {expect}"),
                });
            }
            shard_crcs.push(hex("shard_crc", v, u64::from(u32::MAX))? as u32);
        }

        Ok(Manifest {
            field_bits,
            field_poly,
            m,
            r,
            seed,
            coefficients,
            c,
            file_length: num("file_length", get(&map, "file_length")?)?,
            stripe_count: num("stripe_count", get(&map, "stripe_count")?)?,
            padding: num("padding", get(&map, "padding")?)?,
            shard_crcs,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.serialize().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Manifest::parse(&text)
    }

    /// Bytes of one stripe of message data.
    pub fn stripe_bytes(&self) -> Result<usize> {
        let params = self.params()?;
        Ok(params.message_symbols * params.field.element_bytes())
    }

    /// Expected payload size of every shard.
    pub fn shard_payload_len(&self) -> Result<usize> {
        let params = self.params()?;
        Ok(self.stripe_count as usize * params.alpha * params.field.element_bytes())
    }

    fn check_shard(&self, shard: &Shard) -> Result<()> {
        let node = usize::from(shard.node);
        let expected = self.shard_payload_len()?;
        if shard.payload.len() != expected {
            return Err(ShardError::Length { node, expected, found: shard.payload.len() });
        }
        if let Some(&crc) = self.shard_crcs.get(node) {
            let computed = shard.crc();
            if crc != computed {
                return Err(ShardError::Checksum {
                    path: PathBuf::from(shard_file_name(node)),
                    stored: crc,
                    computed,
                });
            }
        }
        Ok(())
    }
}

fn read_symbol(bytes: &[u8], element_bytes: usize, index: usize) -> FieldElement {
    let at = index * element_bytes;
    match element_bytes {
        1 => FieldElement::from(bytes[at]),
        _ => FieldElement::from_le_bytes([bytes[at], bytes[at + 1]]),
    }
}

fn push_symbol(out: &mut Vec<u8>, element_bytes: usize, value: FieldElement) {
    out.push(value as u8);
    if element_bytes == 2 {
        out.push((value >> 8) as u8);
    }
}

/// A file encoded into `n` shard payloads plus its manifest.
#[derive(Debug, Clone)]
pub struct EncodedFile {
    pub shards: Vec<Shard>,
    pub manifest: Manifest,
}

/// Splits `bytes` into stripes of `k * alpha` symbols (zero-padding the last),
/// encodes each stripe, and distributes the node rows into shard payloads.
pub fn encode_file(desc: &CodeDescription, bytes: &[u8]) -> Result<EncodedFile> {
    let params = desc.params();
    let eb = params.field.element_bytes();
    let stripe_bytes = params.message_symbols * eb;
    let stripe_count = bytes.len().div_ceil(stripe_bytes);
    let padding = stripe_count * stripe_bytes - bytes.len();

    let alpha = params.alpha;
    let mut payloads: Vec<Vec<u8>> = vec![Vec::with_capacity(stripe_count * alpha * eb); params.n];
    let mut message: Vec<Vec<FieldElement>> = vec![vec![0; alpha]; params.k];
    for stripe in 0..stripe_count {
        let start = stripe * stripe_bytes;
        let padded_tail: Vec<u8>;
        let chunk: &[u8] = if start + stripe_bytes <= bytes.len() {
            &bytes[start..start + stripe_bytes]
        } else {
            let mut tail = bytes[start..].to_vec();
            tail.resize(stripe_bytes, 0);
            padded_tail = tail;
            &padded_tail
        };
        for (u, row) in message.iter_mut().enumerate() {
            for (g, slot) in row.iter_mut().enumerate() {
                *slot = read_symbol(chunk, eb, u * alpha + g);
            }
        }
        let cw = encode(&message, desc)?;
        for (node, payload) in payloads.iter_mut().enumerate() {
            for &v in cw.node(node) {
                push_symbol(payload, eb, v);
            }
        }
    }

    let shards: Vec<Shard> = payloads
        .into_iter()
        .enumerate()
        .map(|(node, payload)| Shard { node: node as u16, payload })
        .collect();
    let mut manifest = Manifest::from_description(desc)?;
    manifest.file_length = bytes.len() as u64;
    manifest.stripe_count = stripe_count as u64;
    manifest.padding = padding as u64;
    manifest.shard_crcs = shards.iter().map(Shard::crc).collect();
    Ok(EncodedFile { shards, manifest })
}

/// One stripe's rows from whatever shards are present, tagged with node ids.
pub fn read_stripe(
    shards: &[&Shard],
    manifest: &Manifest,
    stripe: u64,
) -> Result<Vec<(NodeId, Vec<FieldElement>)>> {
    let params = manifest.params()?;
    let eb = params.field.element_bytes();
    let alpha = params.alpha;
    let mut rows = Vec::with_capacity(shards.len());
    for shard in shards {
        manifest.check_shard(shard)?;
        let node = NodeId::from_ordinal(usize::from(shard.node), &params)?;
        let base = stripe as usize * alpha;
        let row: Vec<FieldElement> =
            (0..alpha).map(|g| read_symbol(&shard.payload, eb, base + g)).collect();
        rows.push((node, row));
    }
    Ok(rows)
}

/// Rebuilds the original file bytes from any `k` of the shards.
pub fn reconstruct_file(
    desc: &CodeDescription,
    manifest: &Manifest,
    shards: &[&Shard],
) -> Result<Vec<u8>> {
    let params = desc.params();
    let eb = params.field.element_bytes();
    let alpha = params.alpha;
    if shards.len() != params.k {
        return Err(msr_code::Error::DimensionMismatch {
            what: "reconstruction shards",
            expected: params.k,
            got: shards.len(),
        }
        .into());
    }
    let mut sorted: Vec<&Shard> = shards.to_vec();
    sorted.sort_by_key(|s| s.node);
    for shard in &sorted {
        manifest.check_shard(shard)?;
    }
    let ordinals: Vec<usize> = sorted.iter().map(|s| usize::from(s.node)).collect();
    let decoder = SubsetDecoder::new(desc, &ordinals)?;

    let stripe_count = manifest.stripe_count as usize;
    let mut out = Vec::with_capacity(stripe_count * params.message_symbols * eb);
    let mut rows: Vec<Vec<FieldElement>> = vec![vec![0; alpha]; params.k];
    for stripe in 0..stripe_count {
        let base = stripe * alpha;
        for (row, shard) in rows.iter_mut().zip(&sorted) {
            for (g, slot) in row.iter_mut().enumerate() {
                *slot = read_symbol(&shard.payload, eb, base + g);
            }
        }
        let borrowed: Vec<&[FieldElement]> = rows.iter().map(Vec::as_slice).collect();
        let flat = decoder.decode(&borrowed)?;
        for v in flat {
            push_symbol(&mut out, eb, v);
        }
    }
    out.truncate(manifest.file_length as usize);
    Ok(out)
}

/// Access accounting for a whole-file repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairStats {
    pub helpers: usize,
    /// Symbols read from each helper per stripe (beta).
    pub per_helper: usize,
    /// Symbols read per stripe across all helpers.
    pub total_per_stripe: usize,
    /// Symbols a naive repair reads per stripe (k * alpha).
    pub baseline_per_stripe: usize,
    pub stripes: u64,
    /// Actual symbol reads over the whole file, from the read counter.
    pub symbols_read: usize,
}

/// Regenerates the shard of `failed` from the other `n - 1` shards, reading
/// only the `beta` access-set symbols per helper per stripe.
pub fn repair_file_shard(
    desc: &CodeDescription,
    manifest: &Manifest,
    survivors: &BTreeMap<usize, Shard>,
    failed: NodeId,
) -> Result<(Shard, RepairStats)> {
    let params = desc.params();
    let eb = params.field.element_bytes();
    let alpha = params.alpha;
    let access = params.access_ordinals(failed)?; // rejects parity nodes
    let failed_ord = failed.ordinal(params);

    let mut helpers: Vec<(usize, &Shard)> = Vec::with_capacity(params.n - 1);
    for ord in 0..params.n {
        if ord == failed_ord {
            continue;
        }
        let shard = survivors
            .get(&ord)
            .ok_or(ShardError::MissingShard { node: ord, k: params.k })?;
        manifest.check_shard(shard)?;
        helpers.push((ord, shard));
    }

    let stripe_count = manifest.stripe_count as usize;
    let mut counter = ReadCounter::new(params.n);
    let mut payload = Vec::with_capacity(stripe_count * alpha * eb);
    let mut helper_rows: Vec<HelperSymbols> = helpers
        .iter()
        .map(|&(ord, _)| HelperSymbols {
            node: NodeId::from_ordinal(ord, params).expect("survivor ordinal"),
            symbols: vec![0; params.beta],
        })
        .collect();
    for stripe in 0..stripe_count {
        let base = stripe * alpha;
        for ((ord, shard), helper) in helpers.iter().zip(helper_rows.iter_mut()) {
            for (slot, &g) in helper.symbols.iter_mut().zip(&access) {
                *slot = read_symbol(&shard.payload, eb, base + g);
                counter.record(*ord);
            }
        }
        let symbols = repair_systematic(failed, &helper_rows, desc)?;
        for v in symbols {
            push_symbol(&mut payload, eb, v);
        }
    }

    let stats = RepairStats {
        helpers: params.n - 1,
        per_helper: params.beta,
        total_per_stripe: (params.n - 1) * params.beta,
        baseline_per_stripe: params.message_symbols,
        stripes: stripe_count as u64,
        symbols_read: counter.total(),
    };
    Ok((Shard { node: failed_ord as u16, payload }, stats))
}
