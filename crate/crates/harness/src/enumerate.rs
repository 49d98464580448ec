//! Finite input boxes inside a problem's domain.

use num_bigint::BigInt;

use sep_core::domain::{array_length_strategy, derive_bounds, satisfies, ProblemSpec};
use sep_core::minilang::{Type, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxLimits {
    /// Range for unbounded integer parameters and array elements.
    pub int_range: (i64, i64),
    pub max_array_len: usize,
    /// Maximum number of grid points before constraint filtering.
    pub cap: u64,
}

impl Default for BoxLimits {
    fn default() -> Self {
        BoxLimits {
            int_range: (-3, 3),
            max_array_len: 3,
            cap: 1_000_000,
        }
    }
}

fn axis(spec: &ProblemSpec, name: &str, ty: Type, limits: &BoxLimits) -> Vec<Value> {
    let (lo, hi) = limits.int_range;
    let ints = |lo: BigInt, hi: BigInt| -> Vec<Value> {
        let mut out = Vec::new();
        let mut v = lo;
        while v <= hi {
            out.push(Value::Int(v.clone()));
            v += 1;
        }
        out
    };
    match ty {
        Type::Int => match derive_bounds(&spec.constraints, &spec.signature).remove(name) {
            Some((l, h)) => ints(l, h),
            None => ints(lo.into(), hi.into()),
        },
        Type::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Type::IntArray => {
            let lens = array_length_strategy(name, &spec.constraints, limits.max_array_len).unwrap_or_default();
            let elems: Vec<i64> = (lo..=hi).collect();
            let mut out = Vec::new();
            for n in lens {
                let mut digits = vec![0usize; n];
                'odometer: loop {
                    out.push(Value::array(digits.iter().map(|&d| elems[d])));
                    let mut k = n;
                    loop {
                        if k == 0 {
                            break 'odometer;
                        }
                        k -= 1;
                        digits[k] += 1;
                        if digits[k] < elems.len() {
                            break;
                        }
                        digits[k] = 0;
                    }
                }
            }
            out
        }
        Type::Unit => vec![Value::Unit],
    }
}

/// Every point of the box that satisfies the constraints, in lexicographic
/// order, or `None` if the box exceeds the cap.
pub fn domain_points(spec: &ProblemSpec, limits: &BoxLimits) -> Option<Vec<Vec<Value>>> {
    let axes: Vec<Vec<Value>> = spec
        .signature
        .params
        .iter()
        .map(|p| axis(spec, &p.name, p.ty, limits))
        .collect();
    let size = axes
        .iter()
        .try_fold(1u64, |acc, a| acc.checked_mul(a.len() as u64))?;
    if size > limits.cap {
        return None;
    }
    let mut out = Vec::new();
    if size == 0 {
        return Some(out);
    }
    let mut idx = vec![0usize; axes.len()];
    loop {
        let point: Vec<Value> = idx.iter().zip(&axes).map(|(&i, a)| a[i].clone()).collect();
        if satisfies(&spec.constraints, &spec.signature, &point) {
            out.push(point);
        }
        let mut k = axes.len();
        loop {
            if k == 0 {
                return Some(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}
