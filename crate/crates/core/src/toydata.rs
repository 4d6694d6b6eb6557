//! Procedural paired person/garment scenes in latent space.
//!
//! The "encoder" is the identity: latents are the images. A scene couples
//! a finite-catalog garment texture with a body-dependent smooth field.
//! Inside the inpaint mask, the person wears the garment texture warped
//! by a body-specific affine map of the sampling coordinates, so the
//! masked region is exactly reconstructible from `(garment_id, body_id)`
//! — an oracle reconstructor achieves zero person-region error, which
//! bounds achievable loss and proves the task solvable.
//!
//! All textures are continuous functions of normalized coordinates with
//! values in [−1, 1]; the garment grid is the flat-lay render of the same
//! function at unwarped coordinates.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{mask_zero_region, LatentGrid, RegionMask};
use crate::rng::{Stream, StreamKey};

const MAGIC: &[u8; 4] = b"RCDS";
const VERSION: u32 = 1;

// Key-space tags so texture/body parameter streams are decoupled from
// scene seeds.
const TEX_SPACE: u64 = 0x7465_7874_7572_6531;
const BODY_SPACE: u64 = 0x626f_6479_6669_6c64;
const ROLE_GARMENT_ID: u64 = 1;
const ROLE_MASK: u64 = 2;

/// One synthetic try-on sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyScene {
    person_full: LatentGrid,
    person_masked: LatentGrid,
    garment: LatentGrid,
    mask: RegionMask,
    garment_id: u32,
    body_id: u32,
}

impl ToyScene {
    /// Validated constructor: shapes must agree and `person_masked` must
    /// equal `mask_zero_region(person_full, mask)` bit-exactly.
    pub fn new(
        person_full: LatentGrid,
        person_masked: LatentGrid,
        garment: LatentGrid,
        mask: RegionMask,
        garment_id: u32,
        body_id: u32,
    ) -> Result<Self> {
        if person_full.shape() != garment.shape() {
            return Err(Error::ShapeMismatch {
                context: "ToyScene::new",
                expected: format!("{:?}", person_full.shape()),
                got: format!("{:?}", garment.shape()),
            });
        }
        let expect = mask_zero_region(&person_full, &mask)?;
        if expect != person_masked {
            return Err(Error::Format(
                "person_masked is not the masked person latent".into(),
            ));
        }
        Ok(Self {
            person_full,
            person_masked,
            garment,
            mask,
            garment_id,
            body_id,
        })
    }

    #[inline]
    pub fn person_full(&self) -> &LatentGrid {
        &self.person_full
    }

    #[inline]
    pub fn person_masked(&self) -> &LatentGrid {
        &self.person_masked
    }

    #[inline]
    pub fn garment(&self) -> &LatentGrid {
        &self.garment
    }

    #[inline]
    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    #[inline]
    pub fn garment_id(&self) -> u32 {
        self.garment_id
    }

    #[inline]
    pub fn body_id(&self) -> u32 {
        self.body_id
    }

    /// Same person, different garment conditioning (unpaired evaluation).
    /// The ground-truth person is left untouched and no longer matches the
    /// garment; only distribution metrics are meaningful on the result.
    pub fn with_garment(&self, garment: LatentGrid, garment_id: u32) -> Result<Self> {
        if garment.shape() != self.garment.shape() {
            return Err(Error::ShapeMismatch {
                context: "ToyScene::with_garment",
                expected: format!("{:?}", self.garment.shape()),
                got: format!("{:?}", garment.shape()),
            });
        }
        Ok(Self {
            garment,
            garment_id,
            ..self.clone()
        })
    }
}

/// Person + mismatched garment for the unpaired split.
#[derive(Debug, Clone, PartialEq)]
pub struct UnpairedPair {
    pub scene: ToyScene,
    pub garment: LatentGrid,
    pub garment_id: u32,
}

impl UnpairedPair {
    /// Scene view with the mismatched garment swapped in for sampling.
    pub fn tryon_scene(&self) -> Result<ToyScene> {
        self.scene.with_garment(self.garment.clone(), self.garment_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<ToyScene>,
    pub test_paired: Vec<ToyScene>,
    pub test_unpaired: Vec<UnpairedPair>,
}

/// Scene-geometry and catalog parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub n_patterns: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            channels: 4,
            height: 12,
            width: 8,
            n_patterns: 8,
        }
    }
}

fn check_gen_params(c: usize, h: usize, w: usize, n_patterns: usize) -> Result<()> {
    if c == 0 {
        return Err(Error::InvalidConfig("need at least one channel".into()));
    }
    if h < 8 || w < 8 {
        return Err(Error::InvalidConfig(format!(
            "scene dims must be at least 8x8, got {h}x{w}"
        )));
    }
    if n_patterns < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 garment patterns, got {n_patterns}"
        )));
    }
    Ok(())
}

/// Continuous garment texture for catalog entry `gid`, channel `c`, at
/// normalized coordinates. Defined on all of R²; values in [−1, 1].
fn garment_texture(gid: u32, c: usize, u: f64, v: f64) -> f64 {
    let mut p = StreamKey::root(TEX_SPACE ^ gid as u64).child(c as u64, 0).stream();
    let tau = std::f64::consts::TAU;
    let base = match gid % 3 {
        0 => {
            // stripes
            let k1 = 1.0 + p.index(4) as f64;
            let k2 = 1.0 + p.index(3) as f64;
            let phase = p.uniform_in(0.0, tau);
            let amp = p.uniform_in(0.7, 1.0);
            (2.5 * amp * (tau * (k1 * u + k2 * v) + phase).sin()).tanh()
        }
        1 => {
            // checks
            let k1 = 1.0 + p.index(3) as f64;
            let k2 = 1.0 + p.index(3) as f64;
            let p1 = p.uniform_in(0.0, tau);
            let p2 = p.uniform_in(0.0, tau);
            (3.0 * (tau * k1 * u + p1).sin() * (tau * k2 * v + p2).sin()).tanh()
        }
        _ => {
            // blobs
            let mut acc = -0.55;
            for _ in 0..3 {
                let cu = p.uniform_in(0.1, 0.9);
                let cv = p.uniform_in(0.1, 0.9);
                let r = p.uniform_in(0.12, 0.3);
                let a = p.uniform_in(0.8, 1.6);
                let d2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
                acc += a * (-d2 / (r * r)).exp();
            }
            (1.5 * acc).tanh()
        }
    };
    // small high-contrast logo motif, blended continuously
    let mut logo = StreamKey::root(TEX_SPACE ^ gid as u64).child(999, 0).stream();
    let lu = logo.uniform_in(0.15, 0.85);
    let lv = logo.uniform_in(0.15, 0.85);
    let sign = if (gid / 3 + c as u32) % 2 == 0 { 1.0 } else { -1.0 };
    let wl = 0.09;
    let dist = ((u - lu).abs()).max((v - lv).abs());
    let lam = (1.0 - dist / wl).max(0.0);
    (1.0 - lam) * base + lam * sign * 0.95
}

/// Smooth low-frequency body field for `body_id`, channel `c`.
fn body_field(body_id: u32, c: usize, u: f64, v: f64) -> f64 {
    let mut p = StreamKey::root(BODY_SPACE ^ body_id as u64).child(c as u64, 0).stream();
    let tau = std::f64::consts::TAU;
    let fx = 1.0 + p.index(2) as f64;
    let fy = 1.0 + p.index(2) as f64;
    let px = p.uniform_in(0.0, tau);
    let py = p.uniform_in(0.0, tau);
    let gx = 1.0 + p.index(2) as f64;
    let gy = 1.0 + p.index(2) as f64;
    let q = p.uniform_in(0.0, tau);
    let a1 = p.uniform_in(0.3, 0.5);
    let a2 = p.uniform_in(0.2, 0.3);
    a1 * (tau * (fx * u) + px).sin() * (tau * (fy * v) + py).cos()
        + a2 * (tau * (gx * u + gy * v) + q).sin()
}

/// Body-dependent near-identity affine warp of texture coordinates.
fn body_warp(body_id: u32, u: f64, v: f64) -> (f64, f64) {
    let mut p = StreamKey::root(BODY_SPACE ^ body_id as u64).child(0xAFF, 0).stream();
    let a11 = p.uniform_in(0.85, 1.15);
    let a12 = p.uniform_in(-0.15, 0.15);
    let a21 = p.uniform_in(-0.15, 0.15);
    let a22 = p.uniform_in(0.85, 1.15);
    let cu = p.uniform_in(-0.1, 0.1);
    let cv = p.uniform_in(-0.1, 0.1);
    let (du, dv) = (u - 0.5, v - 0.5);
    (
        0.5 + cu + a11 * du + a12 * dv,
        0.5 + cv + a21 * du + a22 * dv,
    )
}

/// Rectangle-with-notch inpaint region with integer coverage kept within
/// [0.2, 0.5] of the scene area.
fn gen_mask(stream: &mut Stream, h: usize, w: usize) -> RegionMask {
    let cells = (h * w) as f64;
    for _ in 0..64 {
        let rh_lo = ((0.45 * h as f64).ceil() as usize).max(3);
        let rh_hi = ((0.7 * h as f64).floor() as usize).max(rh_lo);
        let rw_lo = ((0.5 * w as f64).ceil() as usize).max(3);
        let rw_hi = ((0.8 * w as f64).floor() as usize).max(rw_lo);
        let rh = rh_lo + stream.index((rh_hi - rh_lo + 1) as u64) as usize;
        let rw = rw_lo + stream.index((rw_hi - rw_lo + 1) as u64) as usize;
        let r0 = stream.index((h - rh + 1) as u64) as usize;
        let c0 = stream.index((w - rw + 1) as u64) as usize;
        let nh = 1 + stream.index(((rh / 3).max(1)) as u64) as usize;
        let nw = 1 + stream.index(((rw / 3).max(1)) as u64) as usize;
        let nc = stream.index((rw - nw + 1) as u64) as usize;
        let coverage = (rh * rw - nh * nw) as f64 / cells;
        if (0.2..=0.5).contains(&coverage) {
            return RegionMask::from_fn(h, w, |hh, ww| {
                let in_rect = hh >= r0 && hh < r0 + rh && ww >= c0 && ww < c0 + rw;
                let in_notch =
                    hh >= r0 && hh < r0 + nh && ww >= c0 + nc && ww < c0 + nc + nw;
                in_rect && !in_notch
            });
        }
    }
    // deterministic fallback: centered rectangle at 36% coverage
    let rh = (3 * h) / 5;
    let rw = (3 * w) / 5;
    let r0 = (h - rh) / 2;
    let c0 = (w - rw) / 2;
    RegionMask::from_fn(h, w, |hh, ww| {
        hh >= r0 && hh < r0 + rh && ww >= c0 && ww < c0 + rw
    })
}

/// The exact in-mask person content implied by `(garment_id, body_id)` —
/// the generator's own warp applied to the garment texture. Out-of-mask
/// cells are zero.
pub fn oracle_person_region(scene: &ToyScene) -> LatentGrid {
    let (c_n, h, w) = scene.person_full.shape();
    LatentGrid::from_fn(c_n, h, w, |c, hh, ww| {
        if scene.mask.get(hh, ww) == 1.0 {
            let u = (hh as f64 + 0.5) / h as f64;
            let v = (ww as f64 + 0.5) / w as f64;
            let (wu, wv) = body_warp(scene.body_id, u, v);
            garment_texture(scene.garment_id, c, wu, wv)
        } else {
            0.0
        }
    })
}

pub fn gen_scene(
    seed: u64,
    channels: usize,
    height: usize,
    width: usize,
    n_patterns: usize,
) -> Result<ToyScene> {
    check_gen_params(channels, height, width, n_patterns)?;
    let key = StreamKey::root(seed);
    let body_id = (seed & 0xffff_ffff) as u32;
    let garment_id = key.child(ROLE_GARMENT_ID, 0).stream().index(n_patterns as u64) as u32;
    let mask = gen_mask(&mut key.child(ROLE_MASK, 0).stream(), height, width);

    let garment = LatentGrid::from_fn(channels, height, width, |c, h, w| {
        let u = (h as f64 + 0.5) / height as f64;
        let v = (w as f64 + 0.5) / width as f64;
        garment_texture(garment_id, c, u, v)
    });
    let person_full = LatentGrid::from_fn(channels, height, width, |c, h, w| {
        let u = (h as f64 + 0.5) / height as f64;
        let v = (w as f64 + 0.5) / width as f64;
        if mask.get(h, w) == 1.0 {
            let (wu, wv) = body_warp(body_id, u, v);
            garment_texture(garment_id, c, wu, wv)
        } else {
            body_field(body_id, c, u, v)
        }
    });
    let person_masked = mask_zero_region(&person_full, &mask)?;
    ToyScene::new(person_full, person_masked, garment, mask, garment_id, body_id)
}

pub fn gen_dataset(
    seed: u64,
    n_train: usize,
    n_test: usize,
    params: &GenParams,
) -> Result<DatasetSplit> {
    check_gen_params(params.channels, params.height, params.width, params.n_patterns)?;
    if n_test % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "n_test must be even (half paired, half unpaired), got {n_test}"
        )));
    }
    let key = StreamKey::root(seed);
    let scene_seed = |section: u64, i: usize| key.child(section, i as u64).u64_at(0);
    let gen = |section: u64, i: usize| {
        gen_scene(
            scene_seed(section, i),
            params.channels,
            params.height,
            params.width,
            params.n_patterns,
        )
    };
    let train = (0..n_train)
        .map(|i| gen(10, i))
        .collect::<Result<Vec<_>>>()?;
    let test_paired = (0..n_test / 2)
        .map(|i| gen(20, i))
        .collect::<Result<Vec<_>>>()?;
    let test_unpaired = (0..n_test / 2)
        .map(|i| {
            let scene = gen(30, i)?;
            // draw a catalog entry distinct from the scene's true garment
            let mut s = key.child(40, i as u64).stream();
            let raw = s.index(params.n_patterns as u64 - 1) as u32;
            let gid = if raw >= scene.garment_id() { raw + 1 } else { raw };
            let garment = LatentGrid::from_fn(
                params.channels,
                params.height,
                params.width,
                |c, h, w| {
                    let u = (h as f64 + 0.5) / params.height as f64;
                    let v = (w as f64 + 0.5) / params.width as f64;
                    garment_texture(gid, c, u, v)
                },
            );
            Ok(UnpairedPair {
                scene,
                garment,
                garment_id: gid,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetSplit {
        train,
        test_paired,
        test_unpaired,
    })
}

fn write_grid_record<W: Write>(w: &mut W, g: &LatentGrid) -> Result<()> {
    let mut buf = Vec::new();
    g.write_to(&mut buf)?;
    w.write_all(&(buf.len() as u64).to_le_bytes())?;
    w.write_all(&buf)?;
    Ok(())
}

fn read_grid_record<R: Read>(r: &mut R) -> Result<LatentGrid> {
    let mut len8 = [0u8; 8];
    r.read_exact(&mut len8)?;
    let len = u64::from_le_bytes(len8) as usize;
    if len > 1 << 32 {
        return Err(Error::Format(format!("grid record length {len} implausible")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    LatentGrid::read_from(buf.as_slice())
}

fn write_scene<W: Write>(w: &mut W, s: &ToyScene) -> Result<()> {
    write_grid_record(w, &s.person_full)?;
    write_grid_record(w, &s.person_masked)?;
    write_grid_record(w, &s.garment)?;
    write_grid_record(w, s.mask.grid())?;
    w.write_all(&s.garment_id.to_le_bytes())?;
    w.write_all(&s.body_id.to_le_bytes())?;
    Ok(())
}

fn read_scene<R: Read>(r: &mut R) -> Result<ToyScene> {
    let person_full = read_grid_record(r)?;
    let person_masked = read_grid_record(r)?;
    let garment = read_grid_record(r)?;
    let mask = RegionMask::new(read_grid_record(r)?)?;
    let mut id4 = [0u8; 4];
    r.read_exact(&mut id4)?;
    let garment_id = u32::from_le_bytes(id4);
    r.read_exact(&mut id4)?;
    let body_id = u32::from_le_bytes(id4);
    ToyScene::new(person_full, person_masked, garment, mask, garment_id, body_id)
}

pub fn save_dataset(split: &DatasetSplit, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(split.train.len() as u64).to_le_bytes())?;
    for s in &split.train {
        write_scene(&mut w, s)?;
    }
    w.write_all(&(split.test_paired.len() as u64).to_le_bytes())?;
    for s in &split.test_paired {
        write_scene(&mut w, s)?;
    }
    w.write_all(&(split.test_unpaired.len() as u64).to_le_bytes())?;
    for u in &split.test_unpaired {
        write_scene(&mut w, &u.scene)?;
        write_grid_record(&mut w, &u.garment)?;
        w.write_all(&u.garment_id.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<DatasetSplit> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad dataset magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let mut u4 = [0u8; 4];
    r.read_exact(&mut u4)?;
    let version = u32::from_le_bytes(u4);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset version {version}"
        )));
    }
    let mut count8 = [0u8; 8];
    let mut read_count = |r: &mut BufReader<File>| -> Result<usize> {
        r.read_exact(&mut count8)?;
        let n = u64::from_le_bytes(count8);
        if n > 1 << 32 {
            return Err(Error::Format(format!("section count {n} implausible")));
        }
        Ok(n as usize)
    };
    let n_train = read_count(&mut r)?;
    let train = (0..n_train)
        .map(|_| read_scene(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let n_paired = read_count(&mut r)?;
    let test_paired = (0..n_paired)
        .map(|_| read_scene(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let n_unpaired = read_count(&mut r)?;
    let test_unpaired = (0..n_unpaired)
        .map(|_| {
            let scene = read_scene(&mut r)?;
            let garment = read_grid_record(&mut r)?;
            let mut id4 = [0u8; 4];
            r.read_exact(&mut id4)?;
            let garment_id = u32::from_le_bytes(id4);
            if garment_id == scene.garment_id() {
                return Err(Error::Format(
                    "unpaired record reuses the scene's own garment".into(),
                ));
            }
            Ok(UnpairedPair {
                scene,
                garment,
                garment_id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetSplit {
        train,
        test_paired,
        test_unpaired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_reproduces_scene() {
        let a = gen_scene(42, 2, 12, 8, 4).unwrap();
        let b = gen_scene(42, 2, 12, 8, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn masked_person_is_masked_full_person() {
        for seed in 0..20 {
            let s = gen_scene(seed, 3, 12, 8, 5).unwrap();
            let expect = mask_zero_region(s.person_full(), s.mask()).unwrap();
            assert_eq!(&expect, s.person_masked());
        }
    }

    #[test]
    fn mask_coverage_in_bounds_over_seed_sweep() {
        for seed in 0..1000 {
            let s = gen_scene(seed, 1, 12, 8, 4).unwrap();
            let cov = s.mask().coverage();
            assert!(
                (0.2..=0.5).contains(&cov),
                "seed {seed}: coverage {cov}"
            );
        }
    }

    #[test]
    fn values_bounded() {
        for seed in [3u64, 77, 1234] {
            let s = gen_scene(seed, 4, 16, 12, 6).unwrap();
            for g in [s.person_full(), s.garment()] {
                assert!(g.data().iter().all(|v| v.abs() <= 1.0));
            }
        }
    }

    #[test]
    fn oracle_reconstructs_masked_region_exactly() {
        for seed in 0..25 {
            let s = gen_scene(seed * 31 + 7, 3, 12, 8, 6).unwrap();
            let oracle = oracle_person_region(&s);
            for c in 0..3 {
                for h in 0..12 {
                    for w in 0..8 {
                        if s.mask().get(h, w) == 1.0 {
                            assert_eq!(
                                oracle.get(c, h, w).to_bits(),
                                s.person_full().get(c, h, w).to_bits()
                            );
                        } else {
                            assert_eq!(oracle.get(c, h, w), 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_gen_params() {
        assert!(gen_scene(1, 1, 4, 8, 4).is_err());
        assert!(gen_scene(1, 1, 8, 4, 4).is_err());
        assert!(gen_scene(1, 1, 8, 8, 1).is_err());
        assert!(gen_scene(1, 0, 8, 8, 4).is_err());
        assert!(gen_dataset(1, 4, 3, &GenParams::default()).is_err());
    }

    #[test]
    fn empty_train_split_is_valid() {
        let d = gen_dataset(5, 0, 4, &GenParams::default()).unwrap();
        assert!(d.train.is_empty());
        assert_eq!(d.test_paired.len(), 2);
        assert_eq!(d.test_unpaired.len(), 2);
    }

    #[test]
    fn unpaired_garments_mismatch() {
        let d = gen_dataset(9, 8, 20, &GenParams::default()).unwrap();
        for u in &d.test_unpaired {
            assert_ne!(u.garment_id, u.scene.garment_id());
        }
    }

    #[test]
    fn no_body_id_collisions_default_sizes() {
        let d = gen_dataset(7, 64, 32, &GenParams::default()).unwrap();
        let mut ids: Vec<u32> = d
            .train
            .iter()
            .chain(&d.test_paired)
            .chain(d.test_unpaired.iter().map(|u| &u.scene))
            .map(|s| s.body_id())
            .collect();
        let n = ids.len();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), n, "body_id collision");
    }

    #[test]
    fn garment_catalog_is_finite() {
        // scenes sharing garment_id share the garment render bit-exactly
        let d = gen_dataset(11, 40, 0, &GenParams::default()).unwrap();
        for a in &d.train {
            for b in &d.train {
                if a.garment_id() == b.garment_id() {
                    assert_eq!(a.garment(), b.garment());
                }
            }
        }
    }

    #[test]
    fn save_load_round_trip_bytes() {
        let dir = std::env::temp_dir().join(format!("rcds_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p1 = dir.join("a.rcds");
        let p2 = dir.join("b.rcds");
        let d = gen_dataset(13, 6, 4, &GenParams::default()).unwrap();
        save_dataset(&d, &p1).unwrap();
        let loaded = load_dataset(&p1).unwrap();
        assert_eq!(loaded, d);
        save_dataset(&loaded, &p2).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn truncated_dataset_is_format_or_io_error() {
        let dir = std::env::temp_dir().join(format!("rcds_trunc_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.rcds");
        let d = gen_dataset(13, 2, 2, &GenParams::default()).unwrap();
        save_dataset(&d, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load_dataset(&p).is_err());
        std::fs::write(&p, b"NOPE").unwrap();
        assert!(matches!(load_dataset(&p), Err(Error::Io(_) | Error::Format(_))));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn empty_split_round_trips() {
        let dir = std::env::temp_dir().join(format!("rcds_empty_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("e.rcds");
        let d = DatasetSplit {
            train: vec![],
            test_paired: vec![],
            test_unpaired: vec![],
        };
        save_dataset(&d, &p).unwrap();
        assert_eq!(load_dataset(&p).unwrap(), d);
        std::fs::remove_dir_all(&dir).ok();
    }
}
