//! Frame-count alignment between renderings of the same material.

use thiserror::Error;

/// Largest tolerated relative difference in frame counts.
pub const MAX_LENGTH_MISMATCH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("frame counts {left} and {right} differ by more than 5%")]
pub struct LengthMismatch {
    pub left: usize,
    pub right: usize,
}

/// Returns the common length both sequences are truncated to.
///
/// The difference is measured relative to the longer sequence.
pub fn aligned_len(left: usize, right: usize) -> Result<usize, LengthMismatch> {
    let (short, long) = if left <= right { (left, right) } else { (right, left) };
    if long == 0 {
        return Ok(0);
    }
    if (long - short) as f64 > MAX_LENGTH_MISMATCH * long as f64 {
        return Err(LengthMismatch { left, right });
    }
    Ok(short)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_lengths() {
        assert_eq!(aligned_len(800, 800), Ok(800));
        assert_eq!(aligned_len(0, 0), Ok(0));
    }

    #[test]
    fn within_tolerance_truncates() {
        assert_eq!(aligned_len(100, 95), Ok(95));
        assert_eq!(aligned_len(95, 100), Ok(95));
    }

    #[test]
    fn beyond_tolerance_fails() {
        assert!(aligned_len(100, 94).is_err());
        assert!(aligned_len(0, 1).is_err());
    }
}
