//! File persistence for the `msr-code` array code: shard files, manifests,
//! and whole-file encode / repair / reconstruct round trips.

pub mod shardio;
