//! Latent grids and the person⊙garment duo layout.
//!
//! [`LatentGrid`] is the universal carrier: a dense C×H×W block of `f64`
//! in row-major `(c, h, w)` order. It holds latents, noises, predictions,
//! gradients, and masks alike. [`DuoGrid`] tags a grid of height `2·H` as
//! vertically stacked person rows over garment rows, and [`RegionMask`]
//! is a single-channel binary grid marking the inpaint region.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LGRD";
const VERSION: u32 = 1;

/// Dense C×H×W grid of `f64`, row-major `(c, h, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl LatentGrid {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for h in 0..height {
                for w in 0..width {
                    data.push(f(c, h, w));
                }
            }
        }
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    /// Wrap an existing buffer; rejects length mismatches and non-finite values.
    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch {
                context: "LatentGrid::from_vec",
                expected: format!("{} elements", channels * height * width),
                got: format!("{}", data.len()),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite value {bad} in grid data"
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, c: usize, h: usize, w: usize) -> usize {
        debug_assert!(c < self.channels && h < self.height && w < self.width);
        (c * self.height + h) * self.width + w
    }

    #[inline]
    pub fn get(&self, c: usize, h: usize, w: usize) -> f64 {
        self.data[self.idx(c, h, w)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, h: usize, w: usize, value: f64) {
        let i = self.idx(c, h, w);
        self.data[i] = value;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    /// Elementwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two same-shaped grids.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same_shape(self, other, "zip_map")?;
        Ok(Self {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    /// self + k·other.
    pub fn add_scaled(&self, other: &Self, k: f64) -> Result<Self> {
        self.zip_map(other, |a, b| a + k * b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn sq_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Serialize: magic `LGRD`, version, dims as `u32` LE, data as `f64` LE.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for dim in [self.channels, self.height, self.width] {
            let dim = u32::try_from(dim)
                .map_err(|_| Error::Format(format!("dimension {dim} exceeds u32")))?;
            w.write_all(&dim.to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!(
                "bad grid magic {:?}, expected {:?}",
                magic, MAGIC
            )));
        }
        let mut u32_buf = [0u8; 4];
        r.read_exact(&mut u32_buf)?;
        let version = u32::from_le_bytes(u32_buf);
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported grid version {version}, expected {VERSION}"
            )));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            r.read_exact(&mut u32_buf)?;
            *d = u32::from_le_bytes(u32_buf) as usize;
        }
        let [channels, height, width] = dims;
        let n = channels
            .checked_mul(height)
            .and_then(|x| x.checked_mul(width))
            .ok_or_else(|| Error::Format("grid dimensions overflow".into()))?;
        let mut data = Vec::with_capacity(n);
        let mut f64_buf = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut f64_buf)?;
            data.push(f64::from_le_bytes(f64_buf));
        }
        Self::from_vec(channels, height, width, data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

pub(crate) fn check_same_shape(
    a: &LatentGrid,
    b: &LatentGrid,
    context: &'static str,
) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch {
            context,
            expected: format!("{:?}", a.shape()),
            got: format!("{:?}", b.shape()),
        });
    }
    Ok(())
}

/// Grid of height `2·region_height`: person rows on top, garment rows below.
#[derive(Debug, Clone, PartialEq)]
pub struct DuoGrid {
    grid: LatentGrid,
    region_height: usize,
}

impl DuoGrid {
    pub fn new(grid: LatentGrid, region_height: usize) -> Result<Self> {
        if grid.height() != 2 * region_height {
            return Err(Error::ShapeMismatch {
                context: "DuoGrid::new",
                expected: format!("height {}", 2 * region_height),
                got: format!("height {}", grid.height()),
            });
        }
        Ok(Self {
            grid,
            region_height,
        })
    }

    #[inline]
    pub fn grid(&self) -> &LatentGrid {
        &self.grid
    }

    #[inline]
    pub fn region_height(&self) -> usize {
        self.region_height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.grid.channels()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn into_grid(self) -> LatentGrid {
        self.grid
    }

    /// Overwrite the person rows with `p` (shape C×H_region×W).
    pub fn set_person_rows(&mut self, p: &LatentGrid) -> Result<()> {
        self.set_rows(p, 0, "DuoGrid::set_person_rows")
    }

    /// Overwrite the garment rows with `g` (shape C×H_region×W).
    pub fn set_garment_rows(&mut self, g: &LatentGrid) -> Result<()> {
        self.set_rows(g, self.region_height, "DuoGrid::set_garment_rows")
    }

    fn set_rows(&mut self, src: &LatentGrid, row0: usize, context: &'static str) -> Result<()> {
        let want = (self.grid.channels(), self.region_height, self.grid.width());
        if src.shape() != want {
            return Err(Error::ShapeMismatch {
                context,
                expected: format!("{want:?}"),
                got: format!("{:?}", src.shape()),
            });
        }
        let w = self.grid.width();
        let h_region = self.region_height;
        for c in 0..self.grid.channels() {
            for h in 0..h_region {
                let dst_start = self.grid.idx(c, row0 + h, 0);
                let src_start = src.idx(c, h, 0);
                self.grid.data_mut()[dst_start..dst_start + w]
                    .copy_from_slice(&src.data()[src_start..src_start + w]);
            }
        }
        Ok(())
    }
}

/// Single-channel grid with values in {0.0, 1.0}; 1.0 marks the inpaint region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    grid: LatentGrid,
}

impl RegionMask {
    pub fn new(grid: LatentGrid) -> Result<Self> {
        if grid.channels() != 1 {
            return Err(Error::ShapeMismatch {
                context: "RegionMask::new",
                expected: "1 channel".into(),
                got: format!("{} channels", grid.channels()),
            });
        }
        for h in 0..grid.height() {
            for w in 0..grid.width() {
                let v = grid.get(0, h, w);
                if v != 0.0 && v != 1.0 {
                    return Err(Error::NonBinaryMask { value: v, h, w });
                }
            }
        }
        Ok(Self { grid })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        Self {
            grid: LatentGrid::from_fn(1, height, width, |_, h, w| {
                if f(h, w) {
                    1.0
                } else {
                    0.0
                }
            }),
        }
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self::from_fn(height, width, |_, _| true)
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::from_fn(height, width, |_, _| false)
    }

    #[inline]
    pub fn grid(&self) -> &LatentGrid {
        &self.grid
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.grid.height()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.width()
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize) -> f64 {
        self.grid.get(0, h, w)
    }

    /// Fraction of cells set to 1.0.
    pub fn coverage(&self) -> f64 {
        self.grid.mean()
    }
}

/// Stack `top` over `bottom` along the height axis.
pub fn spatial_concat(top: &LatentGrid, bottom: &LatentGrid) -> Result<DuoGrid> {
    if top.shape() != bottom.shape() {
        return Err(Error::ShapeMismatch {
            context: "spatial_concat",
            expected: format!("{:?}", top.shape()),
            got: format!("{:?}", bottom.shape()),
        });
    }
    let (c_n, h, w) = top.shape();
    let mut out = LatentGrid::zeros(c_n, 2 * h, w);
    for c in 0..c_n {
        let top_start = top.idx(c, 0, 0);
        let bot_start = bottom.idx(c, 0, 0);
        let plane = h * w;
        let dst = out.idx(c, 0, 0);
        out.data_mut()[dst..dst + plane].copy_from_slice(&top.data()[top_start..top_start + plane]);
        let dst = out.idx(c, h, 0);
        out.data_mut()[dst..dst + plane]
            .copy_from_slice(&bottom.data()[bot_start..bot_start + plane]);
    }
    DuoGrid::new(out, h)
}

/// Split a duo back into its (person, garment) halves.
pub fn split_regions(x: &DuoGrid) -> (LatentGrid, LatentGrid) {
    let (c_n, _, w) = x.grid().shape();
    let h = x.region_height();
    let plane = h * w;
    let mut person = LatentGrid::zeros(c_n, h, w);
    let mut garment = LatentGrid::zeros(c_n, h, w);
    for c in 0..c_n {
        let src = x.grid().idx(c, 0, 0);
        let dst = person.idx(c, 0, 0);
        person.data_mut()[dst..dst + plane].copy_from_slice(&x.grid().data()[src..src + plane]);
        let src = x.grid().idx(c, h, 0);
        let dst = garment.idx(c, 0, 0);
        garment.data_mut()[dst..dst + plane].copy_from_slice(&x.grid().data()[src..src + plane]);
    }
    (person, garment)
}

/// Elementwise `(1 − m)·z`, broadcasting the mask over channels.
pub fn mask_zero_region(z: &LatentGrid, m: &RegionMask) -> Result<LatentGrid> {
    if z.height() != m.height() || z.width() != m.width() {
        return Err(Error::ShapeMismatch {
            context: "mask_zero_region",
            expected: format!("spatial dims {}x{}", z.height(), z.width()),
            got: format!("mask {}x{}", m.height(), m.width()),
        });
    }
    Ok(LatentGrid::from_fn(
        z.channels(),
        z.height(),
        z.width(),
        |c, h, w| z.get(c, h, w) * (1.0 - m.get(h, w)),
    ))
}

/// Area-pool by `factor` then threshold at 0.5; exact ties round up to 1.0.
pub fn downsample_mask(m: &RegionMask, factor: usize) -> Result<RegionMask> {
    if factor == 0 || m.height() % factor != 0 || m.width() % factor != 0 {
        return Err(Error::ShapeMismatch {
            context: "downsample_mask",
            expected: format!("dims divisible by nonzero factor {factor}"),
            got: format!("{}x{}", m.height(), m.width()),
        });
    }
    let block = factor * factor;
    Ok(RegionMask::from_fn(
        m.height() / factor,
        m.width() / factor,
        |h, w| {
            let mut ones = 0usize;
            for dh in 0..factor {
                for dw in 0..factor {
                    if m.get(h * factor + dh, w * factor + dw) == 1.0 {
                        ones += 1;
                    }
                }
            }
            // mean ≥ 0.5 as exact integer arithmetic
            2 * ones >= block
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use proptest::prelude::*;

    #[test]
    fn concat_ones_over_zeros() {
        let top = LatentGrid::filled(1, 2, 2, 1.0);
        let bottom = LatentGrid::zeros(1, 2, 2);
        let duo = spatial_concat(&top, &bottom).unwrap();
        assert_eq!(duo.grid().shape(), (1, 4, 2));
        for h in 0..4 {
            for w in 0..2 {
                let want = if h < 2 { 1.0 } else { 0.0 };
                assert_eq!(duo.grid().get(0, h, w), want);
            }
        }
    }

    #[test]
    fn concat_indexing_brute_force() {
        let mut s = StreamKey::root(101).child(0, 0).stream();
        let top = s.normal_grid(4, 3, 2);
        let bottom = s.normal_grid(4, 3, 2);
        let duo = spatial_concat(&top, &bottom).unwrap();
        for c in 0..4 {
            for h in 0..6 {
                for w in 0..2 {
                    let want = if h < 3 {
                        top.get(c, h, w)
                    } else {
                        bottom.get(c, h - 3, w)
                    };
                    assert_eq!(duo.grid().get(c, h, w), want);
                }
            }
        }
    }

    #[test]
    fn concat_rejects_shape_mismatch() {
        let a = LatentGrid::zeros(1, 2, 2);
        let b = LatentGrid::zeros(1, 3, 2);
        assert!(matches!(
            spatial_concat(&a, &b),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn split_shapes() {
        let duo = DuoGrid::new(LatentGrid::zeros(4, 64, 24), 32).unwrap();
        let (p, g) = split_regions(&duo);
        assert_eq!(p.shape(), (4, 32, 24));
        assert_eq!(g.shape(), (4, 32, 24));
    }

    #[test]
    fn split_constant_duo() {
        let duo = DuoGrid::new(LatentGrid::filled(2, 6, 3, 0.75), 3).unwrap();
        let (p, g) = split_regions(&duo);
        assert!(p.data().iter().all(|&v| v == 0.75));
        assert!(g.data().iter().all(|&v| v == 0.75));
    }

    #[test]
    fn duo_rejects_odd_height() {
        assert!(DuoGrid::new(LatentGrid::zeros(1, 5, 2), 2).is_err());
    }

    #[test]
    fn mask_zero_identity_and_annihilation() {
        let mut s = StreamKey::root(5).child(0, 0).stream();
        let z = s.normal_grid(3, 4, 5);
        let none = RegionMask::zeros(4, 5);
        let all = RegionMask::ones(4, 5);
        assert_eq!(mask_zero_region(&z, &none).unwrap(), z);
        assert!(mask_zero_region(&z, &all)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn mask_zero_checkerboard() {
        let mut s = StreamKey::root(6).child(0, 0).stream();
        let z = s.normal_grid(2, 4, 4);
        let m = RegionMask::from_fn(4, 4, |h, w| (h + w) % 2 == 0);
        let out = mask_zero_region(&z, &m).unwrap();
        for c in 0..2 {
            for h in 0..4 {
                for w in 0..4 {
                    let want = if (h + w) % 2 == 0 { 0.0 } else { z.get(c, h, w) };
                    assert_eq!(out.get(c, h, w), want);
                }
            }
        }
    }

    #[test]
    fn downsample_factor_one_is_identity() {
        let m = RegionMask::from_fn(4, 6, |h, w| h * w % 3 == 0);
        assert_eq!(downsample_mask(&m, 1).unwrap(), m);
    }

    #[test]
    fn downsample_majority_and_tie() {
        // block [1,1,1,0]: mean 0.75 -> 1
        let m = RegionMask::from_fn(2, 2, |h, w| !(h == 1 && w == 1));
        assert_eq!(downsample_mask(&m, 2).unwrap().get(0, 0), 1.0);
        // block [1,1,0,0]: mean exactly 0.5, ties round up -> 1
        let m = RegionMask::from_fn(2, 2, |h, _| h == 0);
        assert_eq!(downsample_mask(&m, 2).unwrap().get(0, 0), 1.0);
        // block [1,0,0,0]: mean 0.25 -> 0
        let m = RegionMask::from_fn(2, 2, |h, w| h == 0 && w == 0);
        assert_eq!(downsample_mask(&m, 2).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn non_binary_mask_rejected() {
        let g = LatentGrid::from_vec(1, 1, 2, vec![0.0, 0.5]).unwrap();
        assert!(matches!(
            RegionMask::new(g),
            Err(Error::NonBinaryMask { value, h: 0, w: 1 } ) if value == 0.5
        ));
    }

    #[test]
    fn serialization_round_trip_bit_exact() {
        let mut s = StreamKey::root(77).child(0, 0).stream();
        let g = s.normal_grid(3, 5, 4);
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"LGRD");
        assert_eq!(buf.len(), 4 + 4 + 12 + 8 * 3 * 5 * 4);
        let back = LatentGrid::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, g);
        for (a, b) in g.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn serialization_rejects_bad_header() {
        let g = LatentGrid::zeros(1, 1, 1);
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            LatentGrid::read_from(bad_magic.as_slice()),
            Err(Error::Format(_))
        ));

        let mut bad_version = buf.clone();
        bad_version[4] = 9;
        assert!(matches!(
            LatentGrid::read_from(bad_version.as_slice()),
            Err(Error::Format(_))
        ));

        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(
            LatentGrid::read_from(truncated),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        assert!(LatentGrid::from_vec(1, 1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(LatentGrid::from_vec(1, 1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn split_concat_round_trip(
            c in 1usize..5,
            h in 1usize..9,
            w in 1usize..9,
            seed in 0u64..1_000_000,
        ) {
            let mut s = StreamKey::root(seed).child(1, 0).stream();
            let top = s.normal_grid(c, h, w);
            let bottom = s.normal_grid(c, h, w);
            let duo = spatial_concat(&top, &bottom).unwrap();
            let (p, g) = split_regions(&duo);
            prop_assert_eq!(&p, &top);
            prop_assert_eq!(&g, &bottom);
            // and back: concat of the split halves reproduces the duo bit-exactly
            let again = spatial_concat(&p, &g).unwrap();
            prop_assert_eq!(again.grid(), duo.grid());
        }

        #[test]
        fn mask_zero_is_idempotent(seed in 0u64..1_000_000) {
            let mut s = StreamKey::root(seed).child(2, 0).stream();
            let z = s.normal_grid(2, 6, 5);
            let m = RegionMask::from_fn(6, 5, |h, w| (h * 5 + w) % 3 == 0);
            let once = mask_zero_region(&z, &m).unwrap();
            let twice = mask_zero_region(&once, &m).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn downsample_output_binary(seed in 0u64..1_000_000, factor in 1usize..4) {
            let mut s = StreamKey::root(seed).child(3, 0).stream();
            let hw = factor * 4;
            let m = RegionMask::from_fn(hw, hw, |_, _| s.uniform() < 0.5);
            let d = downsample_mask(&m, factor).unwrap();
            prop_assert!(d.grid().data().iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }
}
