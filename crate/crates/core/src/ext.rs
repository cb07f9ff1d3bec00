use std::fmt;

/// A real number or positive infinity.
///
/// Standards and inverse densities reach `+inf` legitimately (pooling, the
/// pole of the principal standard), so they carry an explicit tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::PosInf => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    /// Multiplies by a positive scale.
    pub fn scale(self, k: f64) -> ExtReal {
        debug_assert!(k > 0.0);
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x * k),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }

    /// Lossy conversion; `PosInf` maps to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(x)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => f.write_str("inf"),
        }
    }
}
