//! V-shaped transfer functions and their velocity legacy correction.
//!
//! Each transfer function maps a signed velocity to a bit-flip probability
//! in `[0, 1)`. All four are even in `v` and strictly increasing in `|v|`.
//!
//! | kind | probability                    | correction after a flip             |
//! |------|--------------------------------|-------------------------------------|
//! | VT1  | `|2/π · atan(π/2 · v)|`        | `4 / (π² v)`                        |
//! | VT2  | `v² / (1 + v²)`                | `1 / v`                             |
//! | VT3  | `|tanh v|`                     | `½ ln((e^v + 3e^-v) / (e^v - e^-v))`|
//! | VT4  | `2 / (1 + e^-|v|) - 1`         | `ln((1 + 3e^-v) / (1 - e^-v))`      |
//!
//! The VT3 and VT4 rows are shown for `v > 0`; both corrections are odd
//! functions of `v`. A corrected velocity `v'` keeps the sign of `v` and
//! satisfies `p(v') = 1 - p(v)`.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Upper bound on the magnitude of a corrected velocity.
pub const MAX_CORRECTED_SPEED: f64 = 1e12;

/// Lower bound on the magnitude of a corrected velocity. The exact result
/// underflows for large `|v|` under VT3/VT4; the floor keeps the sign.
pub const MIN_CORRECTED_SPEED: f64 = f64::MIN_POSITIVE;

/// Search interval for [`correct_oracle`], on `|x|`.
pub const ORACLE_BRACKET: (f64, f64) = (1e-300, 1e300);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransferError {
    #[error("velocity must be finite, got {0}")]
    NonFinite(f64),
    #[error("velocity correction is undefined at v = 0")]
    ZeroVelocity,
    #[error("oracle could not bracket a root for {kind} at v = {velocity}")]
    OracleBracket { kind: TransferKind, velocity: f64 },
    #[error("unknown transfer kind {0:?} (expected vt1..vt4)")]
    UnknownKind(String),
}

/// One of the four V-shaped transfer functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransferKind {
    Vt1,
    Vt2,
    Vt3,
    Vt4,
}

impl TransferKind {
    pub const ALL: [TransferKind; 4] = [Self::Vt1, Self::Vt2, Self::Vt3, Self::Vt4];

    /// Family index, 1 through 4.
    pub fn index(self) -> u8 {
        match self {
            Self::Vt1 => 1,
            Self::Vt2 => 2,
            Self::Vt3 => 3,
            Self::Vt4 => 4,
        }
    }

    /// Flip probability without input checks; the swarm hot loop uses this.
    #[inline]
    pub fn probability(self, v: f64) -> f64 {
        let a = v.abs();
        match self {
            Self::Vt1 => FRAC_2_PI * (FRAC_PI_2 * a).atan(),
            Self::Vt2 => {
                if a <= 1.0 {
                    a * a / (1.0 + a * a)
                } else {
                    let inv = 1.0 / a;
                    1.0 / (1.0 + inv * inv)
                }
            }
            Self::Vt3 => a.tanh(),
            // 2/(1+e^-a) - 1 == tanh(a/2), without the cancellation near 0.
            Self::Vt4 => (0.5 * a).tanh(),
        }
    }

    /// `1 - probability(v)`, computed without cancellation.
    pub fn complement(self, v: f64) -> f64 {
        let a = v.abs();
        match self {
            Self::Vt1 => {
                if a == 0.0 {
                    1.0
                } else {
                    // atan(x) + atan(1/x) = π/2 for x > 0
                    FRAC_2_PI * (1.0 / (FRAC_PI_2 * a)).atan()
                }
            }
            Self::Vt2 => {
                if a <= 1.0 {
                    1.0 / (1.0 + a * a)
                } else {
                    let inv = 1.0 / a;
                    inv * inv / (1.0 + inv * inv)
                }
            }
            Self::Vt3 => {
                let t = (-2.0 * a).exp();
                2.0 * t / (1.0 + t)
            }
            Self::Vt4 => {
                let t = (-a).exp();
                2.0 * t / (1.0 + t)
            }
        }
    }

    /// Corrected velocity without input checks. `v` must be finite and non-zero.
    #[inline]
    pub fn corrected(self, v: f64) -> f64 {
        let a = v.abs();
        let magnitude = match self {
            Self::Vt1 => 4.0 / (PI * PI * a),
            Self::Vt2 => 1.0 / a,
            // e^{2v'} = (1 + 3e^{-2v}) / (1 - e^{-2v})
            Self::Vt3 => 0.5 * log_ratio(2.0 * a),
            // e^{v'} = (1 + 3e^{-v}) / (1 - e^{-v})
            Self::Vt4 => log_ratio(a),
        };
        magnitude.clamp(MIN_CORRECTED_SPEED, MAX_CORRECTED_SPEED).copysign(v)
    }
}

impl fmt::Display for TransferKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VT{}", self.index())
    }
}

impl FromStr for TransferKind {
    type Err = TransferError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vt1" | "1" => Ok(Self::Vt1),
            "vt2" | "2" => Ok(Self::Vt2),
            "vt3" | "3" => Ok(Self::Vt3),
            "vt4" | "4" => Ok(Self::Vt4),
            _ => Err(TransferError::UnknownKind(s.to_string())),
        }
    }
}

/// `ln((1 + 3e^{-x}) / (1 - e^{-x}))` for `x > 0`, accurate at both ends.
fn log_ratio(x: f64) -> f64 {
    let t = (-x).exp();
    let denominator = if t < 0.5 { (-t).ln_1p() } else { (-(-x).exp_m1()).ln() };
    (3.0 * t).ln_1p() - denominator
}

fn check_finite(v: f64) -> Result<f64, TransferError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(TransferError::NonFinite(v))
    }
}

/// Jump probability of velocity `v` under `kind`.
pub fn sigm(kind: TransferKind, v: f64) -> Result<f64, TransferError> {
    Ok(kind.probability(check_finite(v)?))
}

/// Velocity legacy correction applied after a bit flip: returns `v'` with
/// the sign of `v` and `sigm(v') = 1 - sigm(v)`.
///
/// The magnitude is clamped to
/// `[MIN_CORRECTED_SPEED, MAX_CORRECTED_SPEED]`.
pub fn correct(kind: TransferKind, v: f64) -> Result<f64, TransferError> {
    check_finite(v)?;
    if v == 0.0 {
        return Err(TransferError::ZeroVelocity);
    }
    Ok(kind.corrected(v))
}

/// Numerical inversion of `sigm(x) = 1 - sigm(v)` by bisection on `|x|`.
///
/// Independent of the closed forms in [`correct`]; the tests use it to check
/// them. Bisection runs until the bracket collapses to adjacent doubles,
/// which is tighter than 1e-12 absolute everywhere in the bracket.
pub fn correct_oracle(kind: TransferKind, v: f64) -> Result<f64, TransferError> {
    check_finite(v)?;
    if v == 0.0 {
        return Err(TransferError::ZeroVelocity);
    }
    let p = kind.probability(v);
    let q = kind.complement(v);
    // g is increasing in |x| and vanishes at the root. Compare the smaller
    // of the two tails so the comparison keeps relative precision.
    let g = |x: f64| {
        if q <= 0.5 {
            kind.probability(x) - q
        } else {
            p - kind.complement(x)
        }
    };
    let (mut lo, mut hi) = ORACLE_BRACKET;
    let bracket_failed = TransferError::OracleBracket { kind, velocity: v };
    if !(g(lo) <= 0.0 && g(hi) >= 0.0) {
        return Err(bracket_failed);
    }
    for _ in 0..4096 {
        let mid = if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            lo + 0.5 * (hi - lo)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    Ok(root.copysign(v))
}
