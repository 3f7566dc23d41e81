//! Integer-order Bessel functions of the first kind, a whole row
//! `J_0(x), …, J_N(x)` at a time.
//!
//! Rows come from Miller's backward recurrence normalised with
//! `J_0(x) + 2 Σ_{m≥1} J_{2m}(x) = 1`. Tiny arguments use the leading terms of
//! the power series instead, where the recurrence ratios `2m/x` would overflow.

use thiserror::Error;

pub const MAX_ORDER: usize = 1_000_000;
pub const MAX_ARGUMENT: f64 = 1e6;

/// Below this argument the two-term power series is exact to double precision.
const SERIES_ARGUMENT: f64 = 1e-8;
const RESCALE: f64 = 1e250;
/// Padding digits in the starting order, `10 · ⌈log10(1/tol)⌉` with `tol = 1e-15`.
const DIGIT_PADDING: usize = 150;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("Bessel argument {0} is outside [0, {MAX_ARGUMENT}]")]
    Argument(f64),
    #[error("Bessel order {0} exceeds the supported maximum {MAX_ORDER}")]
    Order(usize),
    #[error("backward recurrence normalisation underflowed (order {order_max}, argument {argument})")]
    Underflow { order_max: usize, argument: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesselRow {
    argument: f64,
    values: Vec<f64>,
}

impl BesselRow {
    pub fn order_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn argument(&self) -> f64 {
        self.argument
    }

    /// `J_0(x) … J_N(x)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `J_n(x)` for any integer `n` with `|n| ≤ N`, using `J_{-n} = (-1)^n J_n`.
    pub fn get(&self, n: i64) -> Option<f64> {
        let v = *self.values.get(n.unsigned_abs() as usize)?;
        Some(if n < 0 && n % 2 != 0 { -v } else { v })
    }
}

fn miller_start(order_max: usize, x: f64) -> usize {
    let xc = x.ceil() as usize;
    // The cube-root term keeps the start well past the turning point for huge x.
    let turning = 20 * (x.cbrt().ceil() as usize);
    let start = order_max + xc + turning + 40 + DIGIT_PADDING;
    start + start % 2
}

pub fn bessel_j_row(order_max: usize, argument: f64) -> Result<BesselRow, BesselError> {
    if !(0.0..=MAX_ARGUMENT).contains(&argument) {
        return Err(BesselError::Argument(argument));
    }
    if order_max > MAX_ORDER {
        return Err(BesselError::Order(order_max));
    }
    let mut values = vec![0.0; order_max + 1];
    if argument == 0.0 {
        values[0] = 1.0;
    } else if argument < SERIES_ARGUMENT {
        small_argument_series(argument, &mut values);
    } else {
        miller(argument, &mut values)?;
    }
    Ok(BesselRow { argument, values })
}

fn small_argument_series(x: f64, values: &mut [f64]) {
    let half = 0.5 * x;
    let y = half * half;
    let mut lead = 1.0;
    for (n, v) in values.iter_mut().enumerate() {
        if n > 0 {
            lead *= half / n as f64;
        }
        let np1 = n as f64 + 1.0;
        *v = lead * (1.0 - y / np1 + y * y / (2.0 * np1 * (np1 + 1.0)));
    }
}

fn miller(x: f64, values: &mut [f64]) -> Result<(), BesselError> {
    let order_max = values.len() - 1;
    let start = miller_start(order_max, x);
    let two_over_x = 2.0 / x;

    let mut upper = 0.0; // F_{m+1}
    let mut current = 1e-30; // F_m
    let mut norm = 0.0; // F_0 + 2 Σ F_{2m}
    // Highest stored index that may still be nonzero after rescaling.
    let mut live_top = 0usize;

    for m in (1..=start).rev() {
        if m <= order_max {
            values[m] = current;
            if live_top == 0 {
                live_top = m;
            }
        }
        if m % 2 == 0 {
            norm += 2.0 * current;
        }
        let lower = (m as f64) * two_over_x * current - upper;
        upper = current;
        current = lower;

        if current.abs() > RESCALE {
            current /= RESCALE;
            upper /= RESCALE;
            norm /= RESCALE;
            if live_top >= m {
                for v in &mut values[m..=live_top] {
                    *v /= RESCALE;
                }
                while live_top > m && values[live_top] == 0.0 {
                    live_top -= 1;
                }
            }
        }
    }
    values[0] = current;
    norm += current;

    if !norm.is_finite() || norm == 0.0 {
        return Err(BesselError::Underflow { order_max, argument: x });
    }
    let inv = 1.0 / norm;
    for v in values.iter_mut() {
        *v *= inv;
    }
    Ok(())
}
