//! Scalar-series preparation: min–max normalization, train/test split,
//! sliding windows, delay embedding and window stitching.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Matrix, Result};

/// Min–max range used to map a series onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormParams {
    pub min: f64,
    pub max: f64,
}

impl NormParams {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let n = NormParams { min, max };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || !(self.max > self.min) {
            return Err(Error::invalid(format!(
                "normalization range needs finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Range of a series; `Degenerate` when it is constant.
    pub fn fit(series: &[f64]) -> Result<Self> {
        if series.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("series contains non-finite values"));
        }
        let min = series.iter().copied().fold(f64::INFINITY, f64::min);
        let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max > min) {
            return Err(Error::Degenerate(format!(
                "series of length {} has no spread (min = max = {min})",
                series.len()
            )));
        }
        Ok(NormParams { min, max })
    }

    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    #[inline]
    pub fn inverse(&self, y: f64) -> f64 {
        y * (self.max - self.min) + self.min
    }
}

/// Maps a series onto `[0, 1]`, returning the range for later inversion.
pub fn normalize(series: &[f64]) -> Result<(Vec<f64>, NormParams)> {
    let norm = NormParams::fit(series)?;
    Ok((apply_norm(series, &norm), norm))
}

/// Normalizes with an existing range (values outside it leave `[0, 1]`).
pub fn apply_norm(series: &[f64], norm: &NormParams) -> Vec<f64> {
    series.iter().map(|&x| norm.forward(x)).collect()
}

pub fn denormalize(series: &[f64], norm: &NormParams) -> Result<Vec<f64>> {
    norm.validate()?;
    Ok(series.iter().map(|&y| norm.inverse(y)).collect())
}

/// Contiguous split: the first `floor(train_fraction * n)` points train, the rest test.
pub fn split(series: &[f64], train_fraction: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train_fraction must lie in (0, 1), got {train_fraction}")));
    }
    let n_train = crate::math::floor(train_fraction * series.len() as f64) as usize;
    if n_train == 0 || n_train == series.len() {
        return Err(Error::invalid(format!(
            "splitting {} points at {train_fraction} leaves an empty segment",
            series.len()
        )));
    }
    Ok((series[..n_train].to_vec(), series[n_train..].to_vec()))
}

/// Number of windows of size `w` at `stride` that fit in `len` points.
pub fn window_count(len: usize, w: usize, stride: usize) -> usize {
    if w == 0 || stride == 0 || w > len {
        0
    } else {
        (len - w) / stride + 1
    }
}

/// Sliding windows: row `k` holds `series[k*stride .. k*stride + w]`.
pub fn make_windows(series: &[f64], w: usize, stride: usize) -> Result<Matrix> {
    if w == 0 || stride == 0 {
        return Err(Error::invalid("window size and stride must be at least 1"));
    }
    if w > series.len() {
        return Err(Error::invalid(format!("window size {w} exceeds series length {}", series.len())));
    }
    let k = window_count(series.len(), w, stride);
    let mut data = Vec::with_capacity(k * w);
    for i in 0..k {
        data.extend_from_slice(&series[i * stride..i * stride + w]);
    }
    Matrix::from_vec(k, w, data)
}

/// Normalized windows of one coordinate, ready for training or evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub windows: Matrix,
    pub window_size: usize,
    pub stride: usize,
    pub norm: NormParams,
    pub source_coordinate: usize,
}

impl WindowedDataset {
    /// Windows an already normalized series. Every value must lie in `[0, 1]`.
    pub fn from_normalized(
        series: &[f64],
        window_size: usize,
        stride: usize,
        norm: NormParams,
        source_coordinate: usize,
    ) -> Result<Self> {
        norm.validate()?;
        if let Some(v) = series.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("normalized series value {v} outside [0, 1]")));
        }
        let windows = make_windows(series, window_size, stride)?;
        Ok(WindowedDataset { windows, window_size, stride, norm, source_coordinate })
    }

    pub fn len(&self) -> usize {
        self.windows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.rows() == 0
    }
}

/// Normalize the whole series, split it, then window both halves.
///
/// The range is taken over the full series before splitting.
pub fn prepare_datasets(
    series: &[f64],
    window_size: usize,
    stride: usize,
    train_fraction: f64,
    source_coordinate: usize,
) -> Result<(WindowedDataset, WindowedDataset)> {
    let (normed, norm) = normalize(series)?;
    let (train, test) = split(&normed, train_fraction)?;
    Ok((
        WindowedDataset::from_normalized(&train, window_size, stride, norm, source_coordinate)?,
        WindowedDataset::from_normalized(&test, window_size, stride, norm, source_coordinate)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmbeddingConfig {
    pub m: usize,
    pub tau: usize,
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.tau == 0 {
            return Err(Error::invalid("embedding needs m >= 1 and tau >= 1"));
        }
        Ok(())
    }

    /// `N - (m - 1) * tau`, or `None` when the series is too short.
    pub fn embedded_len(&self, n: usize) -> Option<usize> {
        let span = (self.m - 1) * self.tau;
        (n > span).then(|| n - span)
    }
}

/// Delay-coordinate embedding: row `i` is `[x_i, x_{i+tau}, ..., x_{i+(m-1)tau}]`.
pub fn delay_embed(series: &[f64], cfg: EmbeddingConfig) -> Result<Matrix> {
    cfg.validate()?;
    let rows = cfg.embedded_len(series.len()).ok_or_else(|| {
        Error::invalid(format!("series of length {} too short for m = {}, tau = {}", series.len(), cfg.m, cfg.tau))
    })?;
    let mut data = Vec::with_capacity(rows * cfg.m);
    for i in 0..rows {
        data.extend((0..cfg.m).map(|k| series[i + k * cfg.tau]));
    }
    Matrix::from_vec(rows, cfg.m, data)
}

/// Merges windows laid out at `k * stride` back into one series.
///
/// Positions covered by several windows take the mean of the covering values.
pub fn stitch(windows: &Matrix, stride: usize) -> Result<Vec<f64>> {
    if windows.rows() == 0 {
        return Err(Error::invalid("no windows to stitch"));
    }
    if stride == 0 || stride > windows.cols() {
        return Err(Error::invalid(format!("stride {stride} leaves gaps between windows of size {}", windows.cols())));
    }
    let starts: Vec<usize> = (0..windows.rows()).map(|k| k * stride).collect();
    let len = (windows.rows() - 1) * stride + windows.cols();
    stitch_at(windows, &starts, len)
}

/// Stitches windows placed at arbitrary `starts`; every position in `0..len`
/// must be covered.
pub(crate) fn stitch_at(windows: &Matrix, starts: &[usize], len: usize) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; len];
    let mut hits = vec![0u32; len];
    for (k, &s) in starts.iter().enumerate() {
        for (j, &v) in windows.row(k).iter().enumerate() {
            let p = s + j;
            hits[p] += 1;
            // incremental mean keeps identical contributions bit-exact
            acc[p] += (v - acc[p]) / hits[p] as f64;
        }
    }
    if let Some(p) = hits.iter().position(|&h| h == 0) {
        return Err(Error::invalid(format!("position {p} not covered by any window")));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_affine() {
        let (y, n) = normalize(&[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.5, 1.0]);
        assert_eq!(n, NormParams { min: 2.0, max: 6.0 });
        assert!(matches!(normalize(&[5.0, 5.0, 5.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn denormalize_inverse() {
        let n = NormParams::new(2.0, 6.0).unwrap();
        assert_eq!(denormalize(&[0.0, 0.5, 1.0], &n).unwrap(), vec![2.0, 4.0, 6.0]);
        assert_eq!(denormalize(&[0.0], &NormParams { min: -1.0, max: 1.0 }).unwrap(), vec![-1.0]);
        assert!(denormalize(&[0.0], &NormParams { min: 1.0, max: 1.0 }).is_err());
    }

    #[test]
    fn split_sizes() {
        let s: Vec<f64> = (0..250_000).map(|i| i as f64).collect();
        let (a, b) = split(&s, 0.8).unwrap();
        assert_eq!((a.len(), b.len()), (200_000, 50_000));
        let s: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let (a, b) = split(&s, 0.8).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        assert_eq!([a, b].concat(), s);
        assert!(split(&s, 0.05).is_err());
        assert!(split(&s, 1.0).is_err());
    }

    #[test]
    fn window_layouts() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        let w = make_windows(&s, 3, 1).unwrap();
        assert_eq!(w, Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 3.0, 4.0], [3.0, 4.0, 5.0]]).unwrap());
        let w = make_windows(&s, 2, 2).unwrap();
        assert_eq!(w, Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        assert!(make_windows(&s, 6, 1).is_err());
        assert_eq!(window_count(200_000, 30, 1), 199_971);
    }

    #[test]
    fn dataset_rejects_out_of_range() {
        let n = NormParams::new(0.0, 1.0).unwrap();
        assert!(WindowedDataset::from_normalized(&[0.0, 1.5, 0.2], 2, 1, n, 0).is_err());
        let d = WindowedDataset::from_normalized(&[0.0, 1.0, 0.2], 2, 1, n, 0).unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn embedding_examples() {
        let e = delay_embed(&[1.0, 2.0, 3.0, 4.0, 5.0], EmbeddingConfig { m: 3, tau: 1 }).unwrap();
        assert_eq!(e, Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 3.0, 4.0], [3.0, 4.0, 5.0]]).unwrap());
        let s = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let e = delay_embed(&s, EmbeddingConfig { m: 2, tau: 2 }).unwrap();
        assert_eq!(e, Matrix::from_rows(&[[1.0, 3.0], [2.0, 4.0], [3.0, 5.0], [4.0, 6.0]]).unwrap());
        let e = delay_embed(&s, EmbeddingConfig { m: 1, tau: 3 }).unwrap();
        assert_eq!(e.as_slice(), &s);
        assert!(delay_embed(&s, EmbeddingConfig { m: 4, tau: 2 }).is_err());
        assert!(delay_embed(&s, EmbeddingConfig { m: 0, tau: 1 }).is_err());
    }

    #[test]
    fn stitch_examples() {
        let w = Matrix::from_rows(&[[1.0, 2.0], [2.0, 3.0]]).unwrap();
        assert_eq!(stitch(&w, 1).unwrap(), vec![1.0, 2.0, 3.0]);
        let w = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(stitch(&w, 2).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        let w = Matrix::from_rows(&[[1.0, 3.0], [5.0, 7.0]]).unwrap();
        assert_eq!(stitch(&w, 1).unwrap(), vec![1.0, 4.0, 7.0]);
        assert!(stitch(&Matrix::zeros(0, 3), 1).is_err());
        assert!(stitch(&w, 3).is_err());
    }

    proptest! {
        #[test]
        fn stitch_inverts_windowing(
            s in prop::collection::vec(-1e6f64..1e6, 1..120),
            w in 1usize..20,
            stride_seed in 1usize..20,
        ) {
            prop_assume!(w <= s.len());
            let stride = 1 + (stride_seed - 1) % w;
            let win = make_windows(&s, w, stride).unwrap();
            prop_assert_eq!(win.rows(), (s.len() - w) / stride + 1);
            let back = stitch(&win, stride).unwrap();
            prop_assert_eq!(&back[..], &s[..back.len()]);
            prop_assert_eq!(back.len(), (win.rows() - 1) * stride + w);
        }

        #[test]
        fn embedding_row_law(n in 1usize..300, m in 1usize..12, tau in 1usize..8) {
            let s: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let cfg = EmbeddingConfig { m, tau };
            match delay_embed(&s, cfg) {
                Ok(e) => {
                    prop_assert_eq!(e.rows(), n - (m - 1) * tau);
                    prop_assert_eq!(e.get(e.rows() - 1, m - 1), (n - 1) as f64);
                }
                Err(_) => prop_assert!(n <= (m - 1) * tau),
            }
        }

        #[test]
        fn normalize_hits_both_ends(s in prop::collection::vec(-1e3f64..1e3, 2..200)) {
            prop_assume!(s.iter().any(|&v| v != s[0]));
            let (y, n) = normalize(&s).unwrap();
            prop_assert!(y.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(y.contains(&0.0) && y.contains(&1.0));
            let back = denormalize(&y, &n).unwrap();
            for (a, b) in back.iter().zip(&s) {
                prop_assert!((a - b).abs() <= 1e-12 * (n.max - n.min).max(1.0));
            }
        }

        #[test]
        fn split_partitions(s in prop::collection::vec(any::<f64>(), 2..200), f in 0.01f64..0.99) {
            if let Ok((a, b)) = split(&s, f) {
                prop_assert_eq!(a.len(), (f * s.len() as f64).floor() as usize);
                let joined: Vec<u64> = a.iter().chain(&b).map(|v| v.to_bits()).collect();
                let orig: Vec<u64> = s.iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(joined, orig);
            }
        }
    }
}
