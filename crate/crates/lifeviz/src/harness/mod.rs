//! Experiment harness: configuration files, checkpoints, the five
//! commands (generate / train / eval / sweep / report), and CSV output.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod sweep;

/// Formats a float with 6 significant digits, the convention for every
/// CSV written by the harness.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let prec = (5 - mag).clamp(0, 17) as usize;
    let s = format!("{x:.prec$}");
    // Trim trailing zeros but keep at least one digit after the point.
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
