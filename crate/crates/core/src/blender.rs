//! Blending regions from a hyperbolic affine map and lattice translations.

use serde::{Deserialize, Serialize};

use crate::cover::{cover_lipschitz, lattice_translate_centers, verify_open_cover, CoverCertificate, Direction, Region};
use crate::error::{Error, Result};
use crate::fiber::FiberMap;
use crate::linalg::{spectral_norm, Mat, Vector};
use crate::skew::hyperbolic_fixed_point;

/// Lattice cells are shrunk by this factor below the image slice width.
pub const LATTICE_SAFETY: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendingKind {
    Cs,
    Cu,
    Double,
}

impl BlendingKind {
    pub fn needs_forward(self) -> bool {
        matches!(self, BlendingKind::Cs | BlendingKind::Double)
    }

    pub fn needs_inverse(self) -> bool {
        matches!(self, BlendingKind::Cu | BlendingKind::Double)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendingRegionSpec {
    #[serde(rename = "B")]
    pub b: Region,
    #[serde(rename = "D")]
    pub d: Region,
    /// Symbols (1-based positions in the map list) generating the region.
    #[serde(rename = "S")]
    pub subset: Vec<usize>,
    pub kind: BlendingKind,
    pub cs_index: usize,
    pub cu_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendingRegion {
    pub maps: Vec<FiberMap>,
    pub spec: BlendingRegionSpec,
}

/// Builds `B = B_{ε/2}(x*)`, `D = B_{3ε/2}(x*)` and the family `Tᵢ∘φ` whose
/// images (or preimages) cover `B̄`. The first map is `φ` itself.
pub fn build_blending_region(phi: &FiberMap, eps: f64, kind: BlendingKind) -> Result<BlendingRegion> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Param(format!("eps must be positive, got {eps}")));
    }
    let (lin, _) = phi
        .affine_parts()
        .ok_or_else(|| Error::Param("blending construction needs an affine map".into()))?;
    let fp = hyperbolic_fixed_point(phi)?
        .ok_or_else(|| Error::Param("map has no fixed point".into()))?;
    if !fp.hyperbolic {
        return Err(Error::Param("fixed point is not hyperbolic".into()));
    }
    let c = lin.nrows();
    let delta = eps / 2.0;
    let mut shifts: Vec<Vector> = vec![Vector::zeros(c)];
    if kind.needs_forward() {
        let plan = lattice_translate_centers(delta, &lin, LATTICE_SAFETY)?;
        shifts.extend(plan.centers);
    }
    if kind.needs_inverse() {
        let inv = phi.inverse().affine_parts().map(|(l, _)| l).unwrap_or_else(|| lin.clone());
        let plan = lattice_translate_centers(delta, &inv, LATTICE_SAFETY)?;
        shifts.extend(plan.centers.iter().map(|q| -(&lin * q)));
    }
    let mut maps = Vec::new();
    let mut kept: Vec<Vector> = Vec::new();
    for t in shifts {
        if kept.iter().any(|k| (k - &t).norm() < 1e-14) {
            continue;
        }
        maps.push(phi.then(&FiberMap::translation(t.clone()))?);
        kept.push(t);
    }
    // `φ` itself stays first and unwrapped.
    maps[0] = phi.clone();
    let spec = BlendingRegionSpec {
        b: Region::ball(fp.point.clone(), delta)?,
        d: Region::ball(fp.point.clone(), 1.5 * eps)?,
        subset: (1..=maps.len()).collect(),
        kind,
        cs_index: fp.s_index,
        cu_index: c - fp.s_index,
    };
    Ok(BlendingRegion { maps, spec })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendingVerdict {
    pub forward: Option<CoverCertificate>,
    pub inverse: Option<CoverCertificate>,
    pub pass: bool,
}

impl BlendingVerdict {
    /// Smallest margin over the certificates present.
    pub fn min_margin(&self) -> f64 {
        self.forward
            .iter()
            .chain(self.inverse.iter())
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn certificates(&self) -> impl Iterator<Item = &CoverCertificate> {
        self.forward.iter().chain(self.inverse.iter())
    }
}

/// Net spacing targeting a margin of a tenth of the region's radius.
pub fn default_blending_spacing(maps: &[FiberMap], spec: &BlendingRegionSpec, direction: Direction) -> Result<f64> {
    let l = cover_lipschitz(maps, direction)?;
    Ok(spec.b.outer_radius() / 10.0 / (4.0 * l.max(1.0)))
}

/// Runs the cover checks the region's kind calls for.
pub fn verify_blending_region(
    maps: &[FiberMap],
    spec: &BlendingRegionSpec,
    h: Option<f64>,
) -> Result<BlendingVerdict> {
    if maps.is_empty() {
        return Err(Error::Param("empty map family".into()));
    }
    let run = |dir: Direction| -> Result<CoverCertificate> {
        let step = match h {
            Some(h) => h,
            None => default_blending_spacing(maps, spec, dir)?,
        };
        verify_open_cover(maps, &spec.b, dir, step)
    };
    let forward = if spec.kind.needs_forward() { Some(run(Direction::Forward)?) } else { None };
    let inverse = if spec.kind.needs_inverse() { Some(run(Direction::Inverse)?) } else { None };
    let pass = forward.iter().chain(inverse.iter()).all(|c| c.pass);
    Ok(BlendingVerdict {
        forward,
        inverse,
        pass,
    })
}

/// cs/cu indices from the common linear part of the family on `B`.
pub fn blender_indices(maps: &[FiberMap], region: &Region) -> Result<(usize, usize)> {
    let first = maps.first().ok_or_else(|| Error::Param("empty map family".into()))?;
    let linear_at = |m: &FiberMap| -> Mat {
        m.affine_parts()
            .map(|(l, _)| l)
            .unwrap_or_else(|| m.jacobian(region.center()))
    };
    let base = linear_at(first);
    let scale = spectral_norm(&base);
    for m in &maps[1..] {
        if spectral_norm(&(linear_at(m) - &base)) > 0.1 * scale {
            return Err(Error::Param("maps do not share a common linear part".into()));
        }
    }
    let sv = base.singular_values();
    if let Some(s) = sv.iter().find(|s| (*s - 1.0).abs() <= 1e-6) {
        return Err(Error::Index(*s));
    }
    let cs = sv.iter().filter(|s| **s < 1.0).count();
    Ok((cs, sv.len() - cs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    fn diag(x: &[f64]) -> Mat {
        Mat::from_diagonal(&v(x))
    }

    #[test]
    fn contracting_blender() {
        let phi = FiberMap::linear(diag(&[0.5, 0.5])).unwrap();
        let br = build_blending_region(&phi, 1.0, BlendingKind::Cs).unwrap();
        assert_eq!(br.spec.cs_index, 2);
        assert_eq!(br.maps[0], phi);
        let verdict = verify_blending_region(&br.maps, &br.spec, None).unwrap();
        assert!(verdict.pass);
        assert!(verdict.min_margin() > 0.0);
    }

    #[test]
    fn saddle_double_blender() {
        let phi = FiberMap::linear(diag(&[0.5, 2.0])).unwrap();
        let br = build_blending_region(&phi, 1.0, BlendingKind::Double).unwrap();
        assert_eq!((br.spec.cs_index, br.spec.cu_index), (1, 1));
        // φ plus four x-translates plus four y-translates.
        assert_eq!(br.maps.len(), 9);
        let verdict = verify_blending_region(&br.maps, &br.spec, None).unwrap();
        assert!(verdict.pass, "{verdict:?}");
        assert!(verdict.forward.is_some() && verdict.inverse.is_some());
    }

    #[test]
    fn expanding_map_has_no_cs_blender() {
        let phi = FiberMap::linear(diag(&[2.0, 2.0])).unwrap();
        assert!(matches!(
            build_blending_region(&phi, 1.0, BlendingKind::Cs),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn doubled_translations_fail() {
        let phi = FiberMap::linear(diag(&[0.5, 2.0])).unwrap();
        let br = build_blending_region(&phi, 1.0, BlendingKind::Cs).unwrap();
        let stretched: Vec<FiberMap> = br
            .maps
            .iter()
            .map(|m| {
                let (l, o) = m.affine_parts().unwrap();
                FiberMap::affine(l, o * 2.0).unwrap()
            })
            .collect();
        let verdict = verify_blending_region(&stretched, &br.spec, None).unwrap();
        assert!(!verdict.pass);
        assert!(!verdict.forward.unwrap().witness_failures.is_empty());
        let single = verify_blending_region(&br.maps[..1], &br.spec, None).unwrap();
        assert!(!single.pass);
    }

    #[test]
    fn index_examples() {
        let ball = Region::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let idx = |d: &[f64]| blender_indices(&[FiberMap::linear(diag(d)).unwrap()], &ball);
        assert_eq!(idx(&[0.5, 2.0]).unwrap(), (1, 1));
        assert_eq!(idx(&[1.0 / 3.0, 0.5]).unwrap(), (2, 0));
        assert_eq!(idx(&[2.0, 3.0]).unwrap(), (0, 2));
        assert!(matches!(idx(&[1.0, 3.0]), Err(Error::Index(_))));
    }
}
