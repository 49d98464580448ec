use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Zero};

use super::BaselineError;

fn check(n: u64, c: u64, k: u64) -> Result<(), BaselineError> {
    if c > n {
        return Err(BaselineError::Domain(format!("c = {c} exceeds n = {n}")));
    }
    if k == 0 || k > n {
        return Err(BaselineError::Domain(format!("k = {k} outside 1..={n}")));
    }
    Ok(())
}

/// Unbiased pass@k, `1 - C(n-c, k) / C(n, k)`, in the product form
/// `1 - prod_{i=n-c+1}^{n} (1 - k/i)`.
pub fn pass_at_k<T: Float>(n: u64, c: u64, k: u64) -> Result<T, BaselineError> {
    check(n, c, k)?;
    let f = |v: u64| T::from(v).expect("count fits the float type");
    if c == 0 {
        return Ok(T::zero());
    }
    if k == 1 {
        return Ok(f(c) / f(n));
    }
    if n - c < k {
        return Ok(T::one());
    }
    let mut miss = T::one();
    for i in (n - c + 1)..=n {
        miss = miss * (T::one() - f(k) / f(i));
    }
    Ok(T::one() - miss)
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact rational pass@k.
pub fn pass_at_k_exact(n: u64, c: u64, k: u64) -> Result<BigRational, BaselineError> {
    check(n, c, k)?;
    let miss = BigRational::new(binomial(n - c, k), binomial(n, k));
    Ok(BigRational::one() - miss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(pass_at_k::<f64>(10, 3, 1).unwrap(), 0.3);
        assert_eq!(pass_at_k::<f64>(5, 2, 5).unwrap(), 1.0);
        // 1 - C(3,2)/C(5,2) = 1 - 3/10
        let exact = pass_at_k_exact(5, 2, 2).unwrap();
        assert_eq!(exact, BigRational::new(7.into(), 10.into()));
        assert!((pass_at_k::<f64>(5, 2, 2).unwrap() - 0.7).abs() < 1e-12);
        assert!((pass_at_k::<f32>(5, 2, 2).unwrap() - 0.7).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(pass_at_k::<f64>(5, 6, 1).is_err());
        assert!(pass_at_k::<f64>(5, 2, 0).is_err());
        assert!(pass_at_k::<f64>(5, 2, 6).is_err());
        assert!(pass_at_k_exact(0, 0, 1).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.into());
        assert_eq!(binomial(20, 10), 184_756.into());
        assert_eq!(binomial(3, 4), 0.into());
    }
}
