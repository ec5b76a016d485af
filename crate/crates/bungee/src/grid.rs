//! Viewport rasterization of the classification and boundary extraction.

use crate::complex::ExtComplex;
use crate::orbit::{classify_point, OrbitClass, OrbitConfig, Semigroup};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A rectangular window of the plane mapped onto a pixel grid.
/// Pixel (0,0) is the top-left corner; sample points are pixel centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub center_re: f64,
    pub center_im: f64,
    pub half_width: f64,
    pub half_height: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl Viewport {
    pub fn from_bounds(
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
        width_px: u32,
        height_px: u32,
    ) -> Viewport {
        Viewport {
            center_re: 0.5 * (xmin + xmax),
            center_im: 0.5 * (ymin + ymax),
            half_width: 0.5 * (xmax - xmin),
            half_height: 0.5 * (ymax - ymin),
            width_px,
            height_px,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.half_width > 0.0
            && self.half_height > 0.0
            && self.width_px > 0
            && self.height_px > 0
            && self.center_re.is_finite()
            && self.center_im.is_finite()
    }

    pub fn cell_width(&self) -> f64 {
        2.0 * self.half_width / self.width_px as f64
    }

    pub fn cell_height(&self) -> f64 {
        2.0 * self.half_height / self.height_px as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell_width().hypot(self.cell_height())
    }

    /// Sample point at the center of pixel (px, py).
    pub fn sample(&self, px: u32, py: u32) -> ExtComplex {
        let re = self.center_re - self.half_width + (px as f64 + 0.5) * self.cell_width();
        let im = self.center_im + self.half_height - (py as f64 + 0.5) * self.cell_height();
        ExtComplex::finite(re, im)
    }

    /// Pixel whose cell contains the point, if inside the viewport.
    pub fn locate(&self, re: f64, im: f64) -> Option<(u32, u32)> {
        let fx = (re - (self.center_re - self.half_width)) / self.cell_width();
        let fy = ((self.center_im + self.half_height) - im) / self.cell_height();
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (px, py) = (fx.floor() as u32, fy.floor() as u32);
        (px < self.width_px && py < self.height_px).then_some((px, py))
    }
}

/// Row-major grid of verdicts over a viewport.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRaster {
    pub viewport: Viewport,
    pub cells: Vec<OrbitClass>,
    pub config_hash: String,
}

impl ClassRaster {
    pub fn at(&self, px: u32, py: u32) -> OrbitClass {
        self.cells[(py * self.viewport.width_px + px) as usize]
    }

    pub fn class_counts(&self) -> [(OrbitClass, usize); 4] {
        let mut counts = [
            (OrbitClass::Escaping, 0),
            (OrbitClass::Bounded, 0),
            (OrbitClass::Bungee, 0),
            (OrbitClass::Unresolved, 0),
        ];
        for c in &self.cells {
            for slot in counts.iter_mut() {
                if slot.0 == *c {
                    slot.1 += 1;
                }
            }
        }
        counts
    }
}

/// Digest binding a raster to the generators and thresholds it was
/// produced from.
pub fn config_hash(h: &Semigroup, vp: &Viewport, cfg: &OrbitConfig) -> String {
    let mut hasher = Sha256::new();
    for (label, gen) in h.labels().iter().zip(h.generators()) {
        hasher.update(label.as_bytes());
        hasher.update([0u8]);
        hasher.update(gen.print().as_bytes());
        hasher.update([0u8]);
    }
    let cfg_txt = format!(
        "{};{};{};{};{};{};{};{};{};{};{};{};{}",
        cfg.escape_radius,
        cfg.bound_radius,
        cfg.max_depth,
        cfg.beam_width,
        cfg.growth_streak,
        cfg.bounded_fraction,
        cfg.overflow_cap,
        vp.center_re,
        vp.center_im,
        vp.half_width,
        vp.half_height,
        vp.width_px,
        vp.height_px,
    );
    hasher.update(cfg_txt.as_bytes());
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Classify every cell of the viewport. Cells are independent; the result
/// is identical for any worker count.
pub fn classify_grid(h: &Semigroup, vp: &Viewport, cfg: &OrbitConfig) -> ClassRaster {
    assert!(vp.is_valid(), "invalid viewport");
    let n = (vp.width_px as usize) * (vp.height_px as usize);
    let cells: Vec<OrbitClass> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let px = (idx as u32) % vp.width_px;
            let py = (idx as u32) / vp.width_px;
            classify_point(h, vp.sample(px, py), cfg).class
        })
        .collect();
    ClassRaster {
        viewport: vp.clone(),
        cells,
        config_hash: config_hash(h, vp, cfg),
    }
}

/// Row-major boolean mask marking class changes between 4-neighbors.
/// Unresolved cells neither set nor trigger the flag.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMask {
    pub width_px: u32,
    pub height_px: u32,
    pub cells: Vec<bool>,
}

impl BoundaryMask {
    pub fn at(&self, px: u32, py: u32) -> bool {
        self.cells[(py * self.width_px + px) as usize]
    }

    pub fn any(&self) -> bool {
        self.cells.iter().any(|&b| b)
    }
}

pub fn extract_boundary(r: &ClassRaster) -> BoundaryMask {
    let (w, h) = (r.viewport.width_px, r.viewport.height_px);
    let mut cells = vec![false; (w as usize) * (h as usize)];
    for py in 0..h {
        for px in 0..w {
            let c = r.at(px, py);
            if c == OrbitClass::Unresolved {
                continue;
            }
            let mut differs = false;
            let neighbors = [
                (px.wrapping_sub(1), py),
                (px + 1, py),
                (px, py.wrapping_sub(1)),
                (px, py + 1),
            ];
            for (nx, ny) in neighbors {
                if nx < w && ny < h {
                    let nc = r.at(nx, ny);
                    if nc != OrbitClass::Unresolved && nc != c {
                        differs = true;
                        break;
                    }
                }
            }
            cells[(py * w + px) as usize] = differs;
        }
    }
    BoundaryMask { width_px: w, height_px: h, cells }
}

/// RGB palette over the four classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Palette {
    pub escaping: [u8; 3],
    pub bounded: [u8; 3],
    pub bungee: [u8; 3],
    pub unresolved: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            escaping: [10, 16, 60],
            bounded: [235, 235, 225],
            bungee: [220, 96, 24],
            unresolved: [110, 110, 110],
        }
    }
}

impl Palette {
    pub fn color(&self, c: OrbitClass) -> [u8; 3] {
        match c {
            OrbitClass::Escaping => self.escaping,
            OrbitClass::Bounded => self.bounded,
            OrbitClass::Bungee => self.bungee,
            OrbitClass::Unresolved => self.unresolved,
        }
    }
}

/// Binary PPM (P6), maxval 255, one pixel per cell, byte-exact for fixed
/// inputs.
pub fn render_ppm(r: &ClassRaster, palette: &Palette) -> Vec<u8> {
    let (w, h) = (r.viewport.width_px, r.viewport.height_px);
    let mut out = Vec::with_capacity(32 + r.cells.len() * 3);
    out.extend_from_slice(format!("P6\n{w} {h}\n255\n").as_bytes());
    for c in &r.cells {
        out.extend_from_slice(&palette.color(*c));
    }
    out
}

/// SHA-256 of a byte artifact, as lowercase hex.
pub fn digest_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex(&hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::Semigroup;

    #[test]
    fn single_cell_raster_bungee() {
        let h = Semigroup::from_sources(&["1/z^2"]).unwrap();
        let vp = Viewport {
            center_re: 0.5,
            center_im: 0.0,
            half_width: 0.01,
            half_height: 0.01,
            width_px: 1,
            height_px: 1,
        };
        let r = classify_grid(&h, &vp, &OrbitConfig::default());
        assert_eq!(r.cells, vec![OrbitClass::Bungee]);
    }

    #[test]
    fn raster_deterministic() {
        let h = Semigroup::from_sources(&["1/z^2"]).unwrap();
        let vp = Viewport::from_bounds(-2.0, -2.0, 2.0, 2.0, 16, 16);
        let cfg = OrbitConfig::default();
        let a = classify_grid(&h, &vp, &cfg);
        let b = classify_grid(&h, &vp, &cfg);
        assert_eq!(a, b);
        assert_eq!(render_ppm(&a, &Palette::default()), render_ppm(&b, &Palette::default()));
    }

    #[test]
    fn boundary_of_constant_raster_is_empty() {
        let r = ClassRaster {
            viewport: Viewport::from_bounds(0.0, 0.0, 1.0, 1.0, 4, 4),
            cells: vec![OrbitClass::Bungee; 16],
            config_hash: String::new(),
        };
        assert!(!extract_boundary(&r).any());
    }

    #[test]
    fn boundary_two_cells() {
        let r = ClassRaster {
            viewport: Viewport::from_bounds(0.0, 0.0, 2.0, 1.0, 2, 1),
            cells: vec![OrbitClass::Bungee, OrbitClass::Bounded],
            config_hash: String::new(),
        };
        let m = extract_boundary(&r);
        assert!(m.at(0, 0) && m.at(1, 0));
    }

    #[test]
    fn boundary_ignores_unresolved() {
        let r = ClassRaster {
            viewport: Viewport::from_bounds(0.0, 0.0, 2.0, 1.0, 2, 1),
            cells: vec![OrbitClass::Bungee, OrbitClass::Unresolved],
            config_hash: String::new(),
        };
        assert!(!extract_boundary(&r).any());
    }

    #[test]
    fn ppm_single_cell_layout() {
        let r = ClassRaster {
            viewport: Viewport::from_bounds(0.0, 0.0, 1.0, 1.0, 1, 1),
            cells: vec![OrbitClass::Bounded],
            config_hash: String::new(),
        };
        let palette = Palette {
            bounded: [0, 0, 0],
            ..Palette::default()
        };
        let bytes = render_ppm(&r, &palette);
        assert_eq!(&bytes, b"P6\n1 1\n255\n\x00\x00\x00");
    }

    #[test]
    fn ppm_payload_size() {
        let r = ClassRaster {
            viewport: Viewport::from_bounds(0.0, 0.0, 1.0, 1.0, 2, 2),
            cells: vec![OrbitClass::Bounded; 4],
            config_hash: String::new(),
        };
        let bytes = render_ppm(&r, &Palette::default());
        let header = b"P6\n2 2\n255\n";
        assert_eq!(bytes.len(), header.len() + 12);
    }

    #[test]
    fn raster_symmetry_for_reciprocal_square() {
        // 1/z^2 commutes with conjugation and negation, so a symmetric
        // viewport produces a flip-invariant raster.
        let h = Semigroup::from_sources(&["1/z^2"]).unwrap();
        let vp = Viewport::from_bounds(-2.0, -2.0, 2.0, 2.0, 24, 24);
        let r = classify_grid(&h, &vp, &OrbitConfig::default());
        let (w, hgt) = (vp.width_px, vp.height_px);
        for py in 0..hgt {
            for px in 0..w {
                assert_eq!(r.at(px, py), r.at(w - 1 - px, py), "horizontal flip");
                assert_eq!(r.at(px, py), r.at(px, hgt - 1 - py), "vertical flip");
            }
        }
    }

    #[test]
    fn ring_boundary_cells_hug_unit_circle() {
        let h = Semigroup::from_sources(&["1/z^2"]).unwrap();
        let mut cfg = OrbitConfig::default();
        cfg.max_depth = 10;
        cfg.overflow_cap = 1e4;
        cfg.escape_radius = 9e3;
        let vp = Viewport::from_bounds(-2.0, -2.0, 2.0, 2.0, 128, 128);
        let r = classify_grid(&h, &vp, &cfg);
        let mask = extract_boundary(&r);
        assert!(mask.any());
        let tol = 2.0 * vp.cell_diagonal();
        for py in 0..vp.height_px {
            for px in 0..vp.width_px {
                if mask.at(px, py) {
                    let z = vp.sample(px, py);
                    assert!(
                        (z.modulus() - 1.0).abs() <= tol,
                        "boundary cell at modulus {}",
                        z.modulus()
                    );
                }
            }
        }
    }

    #[test]
    fn golden_digest_reciprocal_square() {
        // Digests recorded from a verified render; any byte change in the
        // pipeline shows up here.
        let h = Semigroup::from_sources(&["1/z^2"]).unwrap();
        let vp = Viewport::from_bounds(-2.0, -2.0, 2.0, 2.0, 64, 64);
        let r = classify_grid(&h, &vp, &OrbitConfig::default());
        let ppm = render_ppm(&r, &Palette::default());
        assert_eq!(
            digest_hex(&ppm),
            "e843992e837c71a07a001caa9805fec8e6894ae215da28c9afa7fbcc036abdaf"
        );

        // Ring configuration: shallow depth and a low cap leave the
        // bounded ring at |z| = 1 wider than a pixel.
        let mut cfg = OrbitConfig::default();
        cfg.max_depth = 10;
        cfg.overflow_cap = 1e4;
        cfg.escape_radius = 9e3;
        let vp = Viewport::from_bounds(-2.0, -2.0, 2.0, 2.0, 128, 128);
        let r = classify_grid(&h, &vp, &cfg);
        let counts = r.class_counts();
        assert_eq!(counts[1], (OrbitClass::Bounded, 124));
        let ppm = render_ppm(&r, &Palette::default());
        assert_eq!(
            digest_hex(&ppm),
            "ab0a80af985f928ec9b0eb88168522d4c37d2a8912768e46b742a8c9ec18f7d4"
        );
    }

    #[test]
    fn locate_inverts_sample() {
        let vp = Viewport::from_bounds(-2.0, -1.0, 2.0, 1.0, 32, 16);
        for (px, py) in [(0u32, 0u32), (31, 15), (7, 9)] {
            let z = vp.sample(px, py);
            assert_eq!(vp.locate(z.re().unwrap(), z.im().unwrap()), Some((px, py)));
        }
        assert_eq!(vp.locate(5.0, 0.0), None);
    }
}
