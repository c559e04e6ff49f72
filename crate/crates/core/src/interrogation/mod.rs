//! Probing twin models: parameter interpolation and perplexity response to
//! narratives degraded toward higher-frequency words.

pub mod variants;

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};
use crate::lm::{perplexity, LmParameters, Scalar};

pub use variants::{generate_variants, narrative_from_text, read_narratives_dir, SubstitutionTable};

/// Share of the dementia model in an interpolated model, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct InterpolationWeight(f64);

impl InterpolationWeight {
    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for InterpolationWeight {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<InterpolationWeight> for f64 {
    fn from(w: InterpolationWeight) -> f64 {
        w.0
    }
}

/// `alpha · dem + (1 − alpha) · con` over every trainable tensor, embeddings
/// and output bias included.
pub fn interpolate<T: Scalar>(
    dem: &LmParameters<T>,
    con: &LmParameters<T>,
    alpha: InterpolationWeight,
) -> Result<LmParameters<T>> {
    if dem.vocab != con.vocab {
        let (d, c) = (dem.vocab.tokens(), con.vocab.tokens());
        let at = d.iter().zip(c).position(|(a, b)| a != b).unwrap_or(d.len().min(c.len()));
        return Err(Error::ModelMismatch(format!(
            "vocabulary differs at id {at} (sizes {} and {})",
            d.len(),
            c.len()
        )));
    }
    let (ds, cs) = (dem.weights.specs(), con.weights.specs());
    if let Some((a, b)) = ds.iter().zip(&cs).find(|(a, b)| a != b) {
        return Err(Error::ModelMismatch(format!(
            "tensor `{}` is {}x{} in the dementia model but `{}` {}x{} in the control model",
            a.name, a.rows, a.cols, b.name, b.rows, b.cols
        )));
    }
    if ds.len() != cs.len() {
        return Err(Error::ModelMismatch(format!(
            "models have {} and {} tensors",
            ds.len(),
            cs.len()
        )));
    }
    let a = T::from_f64_lossy(alpha.value());
    let b = T::from_f64_lossy(1.0 - alpha.value());
    let mut weights = dem.weights.clone();
    weights.zip_apply(&con.weights, |d, c| *d = a * *d + b * c);
    Ok(LmParameters {
        vocab: con.vocab.clone(),
        config: con.config.clone(),
        weights,
    })
}

/// Severity bands of log10 word frequency used to grade degraded narratives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FrequencyBand {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "0.5-1.0")]
    From05To10,
    #[serde(rename = "1.0-1.5")]
    From10To15,
    #[serde(rename = "1.5-2.0")]
    From15To20,
    #[serde(rename = "2.0-2.5")]
    From20To25,
    #[serde(rename = "2.5-3.0")]
    From25To30,
}

impl FrequencyBand {
    pub const ALL: [FrequencyBand; 6] = [
        FrequencyBand::Baseline,
        FrequencyBand::From05To10,
        FrequencyBand::From10To15,
        FrequencyBand::From15To20,
        FrequencyBand::From20To25,
        FrequencyBand::From25To30,
    ];

    /// 0 for the baseline, rising with degradation.
    pub fn severity(self) -> usize {
        Self::ALL.iter().position(|b| *b == self).expect("listed")
    }

    pub fn label(self) -> &'static str {
        match self {
            FrequencyBand::Baseline => "baseline",
            FrequencyBand::From05To10 => "0.5-1.0",
            FrequencyBand::From10To15 => "1.0-1.5",
            FrequencyBand::From15To20 => "1.5-2.0",
            FrequencyBand::From20To25 => "2.0-2.5",
            FrequencyBand::From25To30 => "2.5-3.0",
        }
    }

    /// `[low, high)` log10 frequency bounds; `None` for the baseline.
    pub fn bounds(self) -> Option<(f64, f64)> {
        let s = self.severity();
        (s > 0).then(|| {
            let low = 0.5 * s as f64;
            (low, low + 0.5)
        })
    }

    pub fn parse(label: &str) -> Option<Self> {
        let l: String = label
            .trim()
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| if c == '–' { '-' } else { c })
            .collect();
        Self::ALL.into_iter().find(|b| b.label() == l)
    }

    pub fn from_bounds(low: f64, high: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|b| {
            b.bounds()
                .is_some_and(|(l, h)| (l - low).abs() < 1e-9 && (h - high).abs() < 1e-9)
        })
    }
}

impl fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub band: FrequencyBand,
    /// Mean perplexity of the band variant.
    pub mean_px: f64,
    /// Mean of `Px − Po`, `Po` being the baseline-narrative perplexity.
    pub mean_px_minus_po: f64,
    pub n: usize,
}

/// Perplexity elevation over the baseline narrative, per `(alpha, band)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCurve {
    pub points: Vec<CurvePoint>,
}

impl PerturbationCurve {
    pub fn point(&self, alpha: f64, band: FrequencyBand) -> Option<&CurvePoint> {
        self.points
            .iter()
            .find(|p| p.band == band && (p.alpha - alpha).abs() < 1e-12)
    }

    /// `mean_px` across bands in severity order for one alpha.
    pub fn perplexities(&self, alpha: f64) -> Vec<(FrequencyBand, f64)> {
        let mut v: Vec<_> = self
            .points
            .iter()
            .filter(|p| (p.alpha - alpha).abs() < 1e-12)
            .map(|p| (p.band, p.mean_px))
            .collect();
        v.sort_by_key(|(b, _)| *b);
        v
    }

    /// Pools curves from many fold pairs: means weighted by sample count.
    pub fn aggregate(curves: &[PerturbationCurve]) -> PerturbationCurve {
        let mut acc: Vec<CurvePoint> = Vec::new();
        for curve in curves {
            for p in &curve.points {
                match acc
                    .iter_mut()
                    .find(|a| a.band == p.band && (a.alpha - p.alpha).abs() < 1e-12)
                {
                    Some(a) => {
                        a.mean_px += p.mean_px * p.n as f64;
                        a.mean_px_minus_po += p.mean_px_minus_po * p.n as f64;
                        a.n += p.n;
                    }
                    None => acc.push(CurvePoint {
                        mean_px: p.mean_px * p.n as f64,
                        mean_px_minus_po: p.mean_px_minus_po * p.n as f64,
                        ..p.clone()
                    }),
                }
            }
        }
        for a in &mut acc {
            if a.n > 0 {
                a.mean_px /= a.n as f64;
                a.mean_px_minus_po /= a.n as f64;
            }
        }
        acc.sort_by(|x, y| x.alpha.total_cmp(&y.alpha).then(x.band.cmp(&y.band)));
        PerturbationCurve { points: acc }
    }

    /// `alpha,band,mean_px_minus_po,n`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "band", "mean_px_minus_po", "n"])?;
        for p in &self.points {
            w.write_record([
                p.alpha.to_string(),
                p.band.label().to_string(),
                p.mean_px_minus_po.to_string(),
                p.n.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Band perplexities per alpha: `alpha,band,mean_perplexity,n`.
    pub fn write_perplexity_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "band", "mean_perplexity", "n"])?;
        for p in &self.points {
            w.write_record([
                p.alpha.to_string(),
                p.band.label().to_string(),
                p.mean_px.to_string(),
                p.n.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores every band variant under each interpolated model
/// `alpha · dem + (1 − alpha) · con` and reports the elevation over the
/// baseline variant.
pub fn interrogate<T: Scalar>(
    con: &LmParameters<T>,
    dem: &LmParameters<T>,
    alphas: &[InterpolationWeight],
    variants: &[(FrequencyBand, TokenSequence)],
) -> Result<PerturbationCurve> {
    let baseline = variants
        .iter()
        .find(|(b, _)| *b == FrequencyBand::Baseline)
        .map(|(_, s)| s)
        .ok_or(Error::MissingBaseline)?;
    let mut points = Vec::with_capacity(alphas.len() * variants.len());
    for &alpha in alphas {
        let model = interpolate(dem, con, alpha)?;
        let po = perplexity(&model, baseline)?;
        let mut ordered: Vec<&(FrequencyBand, TokenSequence)> = variants.iter().collect();
        ordered.sort_by_key(|(b, _)| *b);
        for (band, seq) in ordered {
            let px = if *band == FrequencyBand::Baseline {
                po
            } else {
                perplexity(&model, seq)?
            };
            points.push(CurvePoint {
                alpha: alpha.value(),
                band: *band,
                mean_px: px,
                mean_px_minus_po: px - po,
                n: 1,
            });
        }
    }
    Ok(PerturbationCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::lm::{init_params, LmConfig};
    use proptest::prelude::*;

    fn config() -> LmConfig {
        LmConfig {
            embedding_dim: 4,
            layer_dims: vec![5, 4],
            ..Default::default()
        }
    }

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["mother", "woman", "she", "is", "washing", "dishes"].map(String::from))
    }

    fn model(seed: u64) -> LmParameters<f64> {
        init_params(&config(), &vocab(), seed, None).unwrap()
    }

    fn w(a: f64) -> InterpolationWeight {
        InterpolationWeight::new(a).unwrap()
    }

    #[test]
    fn endpoints_are_exact() {
        let (d, c) = (model(1), model(2));
        assert_eq!(interpolate(&d, &c, w(0.0)).unwrap().weights, c.weights);
        assert_eq!(interpolate(&d, &c, w(1.0)).unwrap().weights, d.weights);
    }

    #[test]
    fn scalar_arithmetic() {
        let mut d = model(1);
        let mut c = model(2);
        d.weights.output_bias[0] = 4.0;
        c.weights.output_bias[0] = 0.0;
        let m = interpolate(&d, &c, w(0.75)).unwrap();
        assert_eq!(m.weights.output_bias[0], 3.0);
    }

    #[test]
    fn mismatches_are_reported() {
        let d = model(1);
        let other_vocab = Vocabulary::from_tokens(["x"].map(String::from));
        let c = init_params::<f64>(&config(), &other_vocab, 1, None).unwrap();
        let err = interpolate(&d, &c, w(0.5)).unwrap_err();
        assert!(err.to_string().contains("vocabulary differs at id 2"), "{err}");

        let wide = LmConfig {
            embedding_dim: 4,
            layer_dims: vec![6, 4],
            ..Default::default()
        };
        let c = init_params::<f64>(&wide, &vocab(), 1, None).unwrap();
        let err = interpolate(&d, &c, w(0.5)).unwrap_err();
        assert!(err.to_string().contains("layer0.input"), "{err}");
    }

    #[test]
    fn alpha_range() {
        assert!(InterpolationWeight::new(1.01).is_err());
        assert!(InterpolationWeight::new(-0.1).is_err());
        assert!(serde_json::from_str::<InterpolationWeight>("2.0").is_err());
    }

    #[test]
    fn band_metadata() {
        assert_eq!(FrequencyBand::parse("1.5-2.0"), Some(FrequencyBand::From15To20));
        assert_eq!(FrequencyBand::from_bounds(2.5, 3.0), Some(FrequencyBand::From25To30));
        assert_eq!(FrequencyBand::From05To10.bounds(), Some((0.5, 1.0)));
        assert_eq!(FrequencyBand::Baseline.bounds(), None);
        assert!(FrequencyBand::Baseline < FrequencyBand::From05To10);
    }

    fn variants() -> Vec<(FrequencyBand, TokenSequence)> {
        vec![
            (FrequencyBand::Baseline, TokenSequence::from_words("mother is washing dishes")),
            (FrequencyBand::From15To20, TokenSequence::from_words("woman is washing dishes")),
            (FrequencyBand::From25To30, TokenSequence::from_words("she is washing")),
        ]
    }

    #[test]
    fn baseline_entry_is_zero_and_twins_agree() {
        let m = model(3);
        let curve = interrogate(&m, &m, &[w(0.0), w(1.0)], &variants()).unwrap();
        assert_eq!(curve.points.len(), 6);
        for band in [FrequencyBand::Baseline, FrequencyBand::From15To20, FrequencyBand::From25To30] {
            let a = curve.point(0.0, band).unwrap();
            let b = curve.point(1.0, band).unwrap();
            assert_eq!(a.mean_px_minus_po, b.mean_px_minus_po);
        }
        assert_eq!(curve.point(0.0, FrequencyBand::Baseline).unwrap().mean_px_minus_po, 0.0);
    }

    #[test]
    fn missing_baseline() {
        let m = model(3);
        let v = variants()[1..].to_vec();
        assert!(matches!(interrogate(&m, &m, &[w(0.5)], &v), Err(Error::MissingBaseline)));
    }

    #[test]
    fn aggregate_is_weighted_mean() {
        let (c, d) = (model(1), model(2));
        let a = interrogate(&c, &d, &[w(0.5)], &variants()).unwrap();
        let b = interrogate(&d, &c, &[w(0.5)], &variants()).unwrap();
        let pooled = PerturbationCurve::aggregate(&[a.clone(), b.clone()]);
        let band = FrequencyBand::From25To30;
        let expect = (a.point(0.5, band).unwrap().mean_px_minus_po + b.point(0.5, band).unwrap().mean_px_minus_po) / 2.0;
        let got = pooled.point(0.5, band).unwrap();
        assert!((got.mean_px_minus_po - expect).abs() < 1e-12);
        assert_eq!(got.n, 2);
    }

    #[test]
    fn csv_shape() {
        let m = model(3);
        let curve = interrogate(&m, &m, &[w(0.0), w(0.5)], &variants()).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("alpha,band,mean_px_minus_po,n"));
        assert_eq!(lines.next(), Some("0,baseline,0,1"));
        assert_eq!(text.lines().count(), 7);
    }

    proptest! {
        #[test]
        fn self_interpolation_is_identity(seed in 0u64..500, alpha in 0.0f64..=1.0) {
            let m = model(seed);
            let out = interpolate(&m, &m, w(alpha)).unwrap();
            for ((_, a), (_, b)) in out.weights.tensors().into_iter().zip(m.weights.tensors()) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0));
                }
            }
        }

        #[test]
        fn complementary_weights_sum(s1 in 0u64..500, s2 in 0u64..500, alpha in 0.0f64..=1.0) {
            let (d, c) = (model(s1), model(s2));
            let x = interpolate(&d, &c, w(alpha)).unwrap();
            let y = interpolate(&d, &c, w(1.0 - alpha)).unwrap();
            let tx = x.weights.tensors();
            let ty = y.weights.tensors();
            let td = d.weights.tensors();
            let tc = c.weights.tensors();
            for i in 0..tx.len() {
                for k in 0..tx[i].1.len() {
                    let lhs = tx[i].1[k] + ty[i].1[k];
                    let rhs = td[i].1[k] + tc[i].1[k];
                    prop_assert!((lhs - rhs).abs() < 1e-12);
                }
            }
            let pp = perplexity(&x, &TokenSequence::from_words("she is washing dishes")).unwrap();
            prop_assert!(pp.is_finite());
        }
    }
}
