//! Small shared helpers: canonical float formatting, JSON string escaping,
//! and the seed derivation used for independent sub-tasks.

/// Formats a float with 17 significant digits (one leading digit plus 16
/// after the point, exponent notation). 17 digits round-trip every f64
/// exactly, so equal values always produce identical text and parsing the
/// text recovers the original bits.
pub fn format_f64(v: f64) -> String {
    debug_assert!(v.is_finite(), "only finite values are serialized");
    format!("{:.16e}", v)
}

/// Escapes a string as a JSON string literal (including the quotes).
pub fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Derives an independent seed for sub-task `index` of a run seeded with
/// `seed` (SplitMix64 over the combined value). Used so that e.g. benchmark
/// cells stay deterministic regardless of execution order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
