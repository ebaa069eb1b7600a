use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Shape of `g` in the affine family `f(x) = base + scale * g(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GKind {
    /// `x`
    Linear,
    /// `x^2`
    Square,
    /// `1 - (1 - x)^2`
    OneMinusSquareComplement,
    /// `1 - exp(-rate * x)`
    ExpSaturating(f64),
}

impl GKind {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            GKind::Linear => x,
            GKind::Square => x * x,
            GKind::OneMinusSquareComplement => 1.0 - (1.0 - x) * (1.0 - x),
            GKind::ExpSaturating(rate) => 1.0 - (-rate * x).exp(),
        }
    }
}

/// Per-step activation probability of an inactive node as a function of the
/// fraction `m/k` of its providers that are already active.
#[derive(Debug, Clone, PartialEq)]
pub enum ActivationFunction {
    /// `gamma` below the critical fraction `f_c`, `epsilon` at or above it.
    Threshold { gamma: f64, epsilon: f64, f_c: f64 },
    Affine { base: f64, scale: f64, g: GKind },
    /// Piecewise-linear through `(fraction, probability)` knots sorted by
    /// fraction, constant beyond the first and last knot.
    Tabulated(Vec<(f64, f64)>),
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} = {v} is not a probability")))
    }
}

impl ActivationFunction {
    pub fn threshold(gamma: f64, epsilon: f64, f_c: f64) -> Result<Self> {
        check_prob("gamma", gamma)?;
        check_prob("epsilon", epsilon)?;
        check_prob("f_c", f_c)?;
        Ok(ActivationFunction::Threshold { gamma, epsilon, f_c })
    }

    pub fn affine(base: f64, scale: f64, g: GKind) -> Result<Self> {
        check_prob("base", base)?;
        check_prob("scale", scale)?;
        if base + scale > 1.0 + 1e-12 {
            return Err(Error::Validation(format!("base + scale = {} exceeds 1", base + scale)));
        }
        if let GKind::ExpSaturating(rate) = g {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::Validation(format!("saturation rate {rate} must be positive")));
            }
        }
        Ok(ActivationFunction::Affine { base, scale, g })
    }

    /// `0.04 + 0.96 g(x)`, the affine family used for the model comparison table.
    pub fn standard_affine(g: GKind) -> Self {
        ActivationFunction::Affine { base: 0.04, scale: 0.96, g }
    }

    pub fn tabulated(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Validation("tabulated activation function needs a knot".into()));
        }
        for &(x, p) in &knots {
            check_prob("knot fraction", x)?;
            check_prob("knot value", p)?;
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation("tabulated knots repeat a fraction".into()));
        }
        Ok(ActivationFunction::Tabulated(knots))
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::tabulated(vec![(0.0, p)])
    }

    /// `f(x)` for a fraction `x` in `[0, 1]`.
    pub fn at_fraction(&self, x: f64) -> f64 {
        match *self {
            ActivationFunction::Threshold { gamma, epsilon, f_c } => {
                if x < f_c {
                    gamma
                } else {
                    epsilon
                }
            }
            ActivationFunction::Affine { base, scale, g } => (base + scale * g.eval(x)).clamp(0.0, 1.0),
            ActivationFunction::Tabulated(ref knots) => {
                let idx = knots.partition_point(|&(kx, _)| kx <= x);
                if idx == 0 {
                    return knots[0].1;
                }
                if idx == knots.len() {
                    return knots[idx - 1].1;
                }
                let (x0, y0) = knots[idx - 1];
                let (x1, y1) = knots[idx];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// `f(m/k)`. A node without providers uses `f(0)`.
    pub fn evaluate(&self, m: usize, k: usize) -> Result<f64> {
        if m > k {
            return Err(Error::Domain(format!("{m} active providers out of {k}")));
        }
        Ok(self.eval_unchecked(m, k))
    }

    pub(crate) fn eval_unchecked(&self, m: usize, k: usize) -> f64 {
        if k == 0 {
            self.at_fraction(0.0)
        } else {
            self.at_fraction(m as f64 / k as f64)
        }
    }

    /// Returns a copy with one threshold parameter replaced.
    pub fn with_threshold_param(&self, name: &str, value: f64) -> Result<Self> {
        match *self {
            ActivationFunction::Threshold { gamma, epsilon, f_c } => match name {
                "gamma" => Self::threshold(value, epsilon, f_c),
                "epsilon" => Self::threshold(gamma, value, f_c),
                "f_c" => Self::threshold(gamma, epsilon, value),
                _ => Err(Error::Validation(format!("unknown threshold parameter {name:?}"))),
            },
            _ => Err(Error::Validation(format!(
                "parameter {name:?} only applies to the threshold model"
            ))),
        }
    }
}

/// Precomputed `f(m/k)` for every `0 <= m <= k <= max_k`.
#[derive(Debug, Clone)]
pub struct ActivationTable {
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl ActivationTable {
    pub fn new(f: &ActivationFunction, max_k: usize) -> Self {
        let mut offsets = Vec::with_capacity(max_k + 1);
        let mut values = Vec::with_capacity((max_k + 1) * (max_k + 2) / 2);
        for k in 0..=max_k {
            offsets.push(values.len());
            values.extend((0..=k).map(|m| f.eval_unchecked(m, k)));
        }
        ActivationTable { offsets, values }
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.values[self.offsets[k] + m]
    }
}

impl fmt::Display for GKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GKind::Linear => write!(f, "linear"),
            GKind::Square => write!(f, "square"),
            GKind::OneMinusSquareComplement => write!(f, "one-minus-square-complement"),
            GKind::ExpSaturating(rate) => write!(f, "exp-saturating={rate}"),
        }
    }
}

impl FromStr for GKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(GKind::Linear),
            "square" => Ok(GKind::Square),
            "one-minus-square-complement" => Ok(GKind::OneMinusSquareComplement),
            _ => {
                let rate = s
                    .strip_prefix("exp-saturating=")
                    .ok_or_else(|| Error::Validation(format!("unknown g shape {s:?}")))?;
                Ok(GKind::ExpSaturating(parse_f64(rate)?))
            }
        }
    }
}

/// Textual model specs:
///
/// * `threshold:GAMMA,EPSILON,F_C`
/// * `affine:SHAPE` or `affine:SHAPE:BASE,SCALE` (base/scale default to 0.04/0.96)
/// * `tabulated:X=P,X=P,...`
/// * `constant:P`
impl FromStr for ActivationFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Validation(format!("model spec {s:?} has no `kind:` prefix")))?;
        match kind {
            "threshold" => {
                let v = parse_list(rest)?;
                match v[..] {
                    [g, e, c] => Self::threshold(g, e, c),
                    _ => Err(Error::Validation(format!("threshold expects 3 values, got {}", v.len()))),
                }
            }
            "affine" => {
                let (shape, coeffs) = match rest.split_once(':') {
                    Some((shape, coeffs)) => (shape, Some(coeffs)),
                    None => (rest, None),
                };
                let g: GKind = shape.parse()?;
                match coeffs.map(parse_list).transpose()?.as_deref() {
                    None => Self::affine(0.04, 0.96, g),
                    Some(&[b, sc]) => Self::affine(b, sc, g),
                    Some(_) => Err(Error::Validation("affine coefficients are BASE,SCALE".into())),
                }
            }
            "tabulated" => {
                let knots = rest
                    .split(',')
                    .map(|kv| {
                        let (x, p) = kv
                            .split_once('=')
                            .ok_or_else(|| Error::Validation(format!("tabulated knot {kv:?} is not X=P")))?;
                        Ok((parse_f64(x)?, parse_f64(p)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::tabulated(knots)
            }
            "constant" => Self::constant(parse_f64(rest)?),
            _ => Err(Error::Validation(format!("unknown model kind {kind:?}"))),
        }
    }
}

impl fmt::Display for ActivationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationFunction::Threshold { gamma, epsilon, f_c } => {
                write!(f, "threshold:{gamma},{epsilon},{f_c}")
            }
            ActivationFunction::Affine { base, scale, g } => write!(f, "affine:{g}:{base},{scale}"),
            ActivationFunction::Tabulated(knots) => {
                write!(f, "tabulated:")?;
                for (i, (x, p)) in knots.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}={p}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Validation(format!("{s:?} is not a number")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_switches_at_critical_fraction() {
        let f = ActivationFunction::threshold(0.04, 0.6, 0.4).unwrap();
        assert_eq!(f.evaluate(1, 4).unwrap(), 0.04);
        assert_eq!(f.evaluate(2, 4).unwrap(), 0.6);
        assert_eq!(f.evaluate(2, 5).unwrap(), 0.6);
        assert_eq!(f.evaluate(0, 0).unwrap(), 0.04);
        assert!(matches!(f.evaluate(5, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn affine_shapes() {
        let lin = ActivationFunction::standard_affine(GKind::Linear);
        assert!((lin.evaluate(3, 3).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lin.evaluate(0, 3).unwrap(), 0.04);
        let sq = ActivationFunction::standard_affine(GKind::Square);
        assert!((sq.evaluate(1, 2).unwrap() - (0.04 + 0.96 * 0.25)).abs() < 1e-15);
        let comp = ActivationFunction::standard_affine(GKind::OneMinusSquareComplement);
        assert!((comp.evaluate(1, 2).unwrap() - (0.04 + 0.96 * 0.75)).abs() < 1e-15);
        let ex = ActivationFunction::standard_affine(GKind::ExpSaturating(3.0));
        assert!((ex.evaluate(1, 1).unwrap() - (0.04 + 0.96 * (1.0 - (-3.0f64).exp()))).abs() < 1e-15);
        assert!(ActivationFunction::affine(0.5, 0.6, GKind::Linear).is_err());
    }

    #[test]
    fn tabulated_interpolates() {
        let f = ActivationFunction::tabulated(vec![(1.0, 1.0), (0.0, 0.2)]).unwrap();
        assert_eq!(f.at_fraction(0.0), 0.2);
        assert!((f.at_fraction(0.5) - 0.6).abs() < 1e-15);
        assert_eq!(f.at_fraction(1.0), 1.0);
        let c = ActivationFunction::constant(0.3).unwrap();
        assert_eq!(c.evaluate(2, 7).unwrap(), 0.3);
    }

    #[test]
    fn outputs_stay_in_unit_interval() {
        let models = [
            ActivationFunction::threshold(0.04, 0.6, 0.4).unwrap(),
            ActivationFunction::standard_affine(GKind::Linear),
            ActivationFunction::standard_affine(GKind::Square),
            ActivationFunction::standard_affine(GKind::OneMinusSquareComplement),
            ActivationFunction::standard_affine(GKind::ExpSaturating(1.0)),
            ActivationFunction::affine(0.0, 1.0, GKind::ExpSaturating(3.0)).unwrap(),
        ];
        for f in &models {
            for k in 0..30 {
                for m in 0..=k {
                    let v = f.evaluate(m, k).unwrap();
                    assert!((0.0..=1.0).contains(&v), "{f} at {m}/{k} = {v}");
                }
            }
        }
    }

    #[test]
    fn spec_strings_parse_and_print() {
        let f: ActivationFunction = "threshold:0.04,0.6,0.4".parse().unwrap();
        assert_eq!(f, ActivationFunction::Threshold { gamma: 0.04, epsilon: 0.6, f_c: 0.4 });
        let a: ActivationFunction = "affine:linear".parse().unwrap();
        assert_eq!(a, ActivationFunction::standard_affine(GKind::Linear));
        for s in [
            "threshold:0.04,0.6,0.4",
            "affine:exp-saturating=3:0.04,0.96",
            "affine:square:0.1,0.5",
            "tabulated:0=0.1,0.5=0.9",
        ] {
            let f: ActivationFunction = s.parse().unwrap();
            assert_eq!(f.to_string().parse::<ActivationFunction>().unwrap(), f);
        }
        for bad in ["bogus:1", "threshold:0.1,0.2", "affine:cubic", "threshold", "constant:2"] {
            assert!(bad.parse::<ActivationFunction>().is_err(), "{bad}");
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let f = ActivationFunction::threshold(0.04, 0.6, 0.4).unwrap();
        let t = ActivationTable::new(&f, 12);
        for k in 0..=12 {
            for m in 0..=k {
                assert_eq!(t.get(m, k), f.evaluate(m, k).unwrap());
            }
        }
    }
}
