use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of wavelength samples: 400..=700 nm every 10 nm.
pub const N_SAMPLES: usize = 31;
pub const LAMBDA_MIN_NM: f64 = 400.0;
pub const LAMBDA_STEP_NM: f64 = 10.0;

/// A function of wavelength sampled on the 31-point grid.
pub type Spectrum<T> = [T; N_SAMPLES];

/// Second radiation constant `hc / k` in nm K.
const C2_NM_K: f64 = 1.438_776_877e7;

pub fn wavelengths<T: Scalar>() -> Spectrum<T> {
    std::array::from_fn(|i| T::of(LAMBDA_MIN_NM + LAMBDA_STEP_NM * i as f64))
}

pub fn flat<T: Scalar>(level: T) -> Spectrum<T> {
    [level; N_SAMPLES]
}

/// Black-body spectral radiance at `cct` kelvin, scaled to unit maximum over the grid.
pub fn planckian_spd<T: Scalar>(cct: T) -> Result<Spectrum<T>> {
    if !(cct >= T::of(1000.0) && cct <= T::of(20000.0)) {
        return Err(Error::CctOutOfRange(cct.as_f64()));
    }
    let c2 = T::of(C2_NM_K);
    // lambda^-5 / (exp(c2 / (lambda T)) - 1); the 2hc^2 prefactor cancels in the normalisation.
    let raw = wavelengths::<T>().map(|l| T::one() / (l.powi(5) * ((c2 / (l * cct)).exp_m1())));
    let peak = raw.iter().copied().fold(T::zero(), T::max);
    Ok(raw.map(|v| v / peak))
}

/// Gaussian bump `exp(-(lambda - peak)^2 / (2 sigma^2))`.
pub fn gaussian<T: Scalar>(peak_nm: T, sigma_nm: T) -> Spectrum<T> {
    let two_s2 = T::of(2.0) * sigma_nm * sigma_nm;
    wavelengths::<T>().map(|l| (-(l - peak_nm) * (l - peak_nm) / two_s2).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monotone(s: &[f64], increasing: bool) -> bool {
        s.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
    }

    #[test]
    fn grid() {
        let w = wavelengths::<f64>();
        assert_eq!(w[0], 400.0);
        assert_eq!(w[30], 700.0);
    }

    #[test]
    fn planck_shapes() {
        assert!(monotone(&planckian_spd(2500.0).unwrap(), true));
        assert!(monotone(&planckian_spd(20000.0).unwrap(), false));
        let s = planckian_spd(6500.0f64).unwrap();
        assert_eq!(s.iter().copied().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn planck_ratio_matches_direct_formula() {
        // Independent evaluation of Planck's law in SI units.
        let (h, c, k) = (6.626_070_15e-34f64, 2.997_924_58e8f64, 1.380_649e-23f64);
        let b = |lambda_nm: f64, t: f64| {
            let l = lambda_nm * 1e-9;
            2.0 * h * c * c / l.powi(5) / ((h * c / (l * k * t)).exp() - 1.0)
        };
        let oracle = b(450.0, 6500.0) / b(650.0, 6500.0);
        let s = planckian_spd(6500.0f64).unwrap();
        let got = s[5] / s[25];
        assert!(((got - oracle) / oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn cct_range_is_enforced() {
        assert!(matches!(planckian_spd(999.0f64), Err(Error::CctOutOfRange(_))));
        assert!(planckian_spd(20001.0f64).is_err());
        assert!(planckian_spd(f64::NAN).is_err());
        assert!(planckian_spd(1000.0f32).is_ok());
    }
}
