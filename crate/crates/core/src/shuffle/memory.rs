//! Memory footprint of the per-epoch bookkeeping.

pub const MIB: f64 = 1024.0 * 1024.0;

/// Bytes held by the random assignment table: one id per instance.
pub fn assignment_table_bytes(num_instances: u64, id_width: u64) -> u64 {
    num_instances * id_width
}

/// Bytes held by the offset table: one offset per instance. Dense data
/// needs no table.
pub fn offset_table_bytes(num_instances: u64, offset_width: u64, sparse: bool) -> u64 {
    if sparse {
        num_instances * offset_width
    } else {
        0
    }
}

pub fn to_mib(bytes: u64) -> f64 {
    bytes as f64 / MIB
}

/// Bytes a bounded shuffle queue holds at `record_bytes` per instance.
pub fn queue_bytes(queue_size: u64, record_bytes: u64) -> u64 {
    queue_size * record_bytes
}
