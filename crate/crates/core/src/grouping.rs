//! Proto-object grouping: complex edge cells, ON/OFF centre-surround cells,
//! von Mises association fields, border ownership and grouping cells.
//!
//! For each pyramid level and orientation `theta`:
//!
//! ```text
//! E       = sqrt((even * map)^2 + (odd * map)^2)
//! ON, OFF = rect(+-(cs * map))
//! B_side  = rect(E . vmsum(v_side * ON)) + rect(E . vmsum(v_side * OFF))
//! Grp_L   = v_theta    # (M_L . B_L - w_p M_L . B_R)
//! Grp_R   = v_theta+pi # (M_R . B_R - w_p M_R . B_L)
//! ```
//!
//! where `*` is correlation, `#` convolution, `.` pointwise product and
//! `M_L`, `M_R` the ownership masks. Grouping uses convolution so that a cell
//! collects from borders whose owned side faces it.

use std::array;

use rayon::prelude::*;

use crate::error::Result;
use crate::filter::{convolve, correlate, flush_small};
use crate::frame::FieldMap;
use crate::kernels::{CenterSurroundBank, EdgeBank, KernelBank, VonMisesBank};
use crate::pyramid::{ImagePyramid, PyramidKind};

/// Relative magnitude below which zero-DC filter outputs are treated as 0.
pub const ROUNDOFF_FLUSH: f64 = 1e-12;

pub type PerTheta = [FieldMap; 4];

fn per_theta(f: impl FnMut(usize) -> FieldMap) -> PerTheta {
    array::from_fn(f)
}

/// Contrast-invariant edge energy per orientation.
pub fn complex_edges(map: &FieldMap, bank: &EdgeBank) -> PerTheta {
    let scale = map.max_abs();
    per_theta(|i| {
        let e = correlate(map, &bank.even[i]);
        let o = correlate(map, &bank.odd[i]);
        let mut out = e.zip_with(&o, |a, b| a.hypot(b));
        flush_small(&mut out, scale, ROUNDOFF_FLUSH);
        out
    })
}

/// `(ON, OFF)`; OFF inverts the ON-centre response before rectifying.
pub fn center_surround(map: &FieldMap, bank: &CenterSurroundBank) -> (FieldMap, FieldMap) {
    let mut cs = correlate(map, &bank.on);
    flush_small(&mut cs, map.max_abs(), ROUNDOFF_FLUSH);
    (cs.map(|v| v.max(0.0)), cs.map(|v| (-v).max(0.0)))
}

/// One field per side and orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct SideFields {
    pub left: PerTheta,
    pub right: PerTheta,
}

impl SideFields {
    fn zip(&self, other: &SideFields, f: impl Fn(&FieldMap, &FieldMap) -> FieldMap) -> SideFields {
        SideFields {
            left: per_theta(|i| f(&self.left[i], &other.left[i])),
            right: per_theta(|i| f(&self.right[i], &other.right[i])),
        }
    }

    fn fields(&self) -> impl Iterator<Item = &FieldMap> {
        self.left.iter().chain(self.right.iter())
    }

    fn from_fields(mut f: impl FnMut(usize) -> FieldMap) -> SideFields {
        SideFields {
            left: per_theta(&mut f),
            right: per_theta(|i| f(i + 4)),
        }
    }
}

/// Correlates a centre-surround response with every association field.
pub fn von_mises_filter(cs: &FieldMap, vm: &VonMisesBank) -> SideFields {
    SideFields {
        left: per_theta(|i| correlate(cs, &vm.left[i])),
        right: per_theta(|i| correlate(cs, &vm.right[i])),
    }
}

/// Adds to each level the coarser levels, mapped to its grid and weighted
/// `2^-(k - j)` for level `k` seen from level `j` (level 0 is finest).
pub fn von_mises_sum(levels: &[FieldMap], kind: PyramidKind) -> Vec<FieldMap> {
    (0..levels.len())
        .map(|j| {
            let (w, h) = levels[j].dims();
            let mut acc = levels[j].clone();
            for (k, coarse) in levels.iter().enumerate().skip(j + 1) {
                let weight = 0.5f64.powi((k - j) as i32);
                acc.add_scaled(&kind.resample(coarse, w, h), weight);
            }
            acc
        })
        .collect()
}

fn side_fields_sum(levels: &[SideFields], kind: PyramidKind) -> Vec<SideFields> {
    let mut per_field: Vec<Vec<FieldMap>> = (0..8)
        .map(|f| {
            let stack: Vec<FieldMap> = levels
                .iter()
                .map(|s| s.fields().nth(f).expect("eight fields").clone())
                .collect();
            von_mises_sum(&stack, kind)
        })
        .collect();
    (0..levels.len())
        .rev()
        .map(|_| SideFields::from_fields(|f| per_field[f].pop().expect("one per level")))
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BorderOwnership {
    pub light: SideFields,
    pub dark: SideFields,
    pub left: PerTheta,
    pub right: PerTheta,
}

/// Light and dark paths modulated by edge energy, then summed per side so
/// that ownership does not depend on contrast polarity.
pub fn border_ownership(edges: &PerTheta, on_summed: &SideFields, off_summed: &SideFields) -> Result<BorderOwnership> {
    for i in 0..4 {
        for f in [&on_summed.left[i], &on_summed.right[i], &off_summed.left[i], &off_summed.right[i]] {
            edges[i].same_dims(f)?;
        }
    }
    let gate = |s: &SideFields| SideFields {
        left: per_theta(|i| edges[i].zip_with(&s.left[i], |e, v| (e * v).max(0.0))),
        right: per_theta(|i| edges[i].zip_with(&s.right[i], |e, v| (e * v).max(0.0))),
    };
    let light = gate(on_summed);
    let dark = gate(off_summed);
    let sum = light.zip(&dark, |a, b| a.zip_with(b, |x, y| x + y));
    Ok(BorderOwnership {
        light,
        dark,
        left: sum.left,
        right: sum.right,
    })
}

/// Ownership masks: 1.0 where the side wins, ties go left.
#[derive(Clone, Debug, PartialEq)]
pub struct Masks {
    pub left: PerTheta,
    pub right: PerTheta,
}

pub fn bo_masks(b: &BorderOwnership) -> Masks {
    Masks {
        left: per_theta(|i| b.left[i].zip_with(&b.right[i], |l, r| if l >= r { 1.0 } else { 0.0 })),
        right: per_theta(|i| b.left[i].zip_with(&b.right[i], |l, r| if l >= r { 0.0 } else { 1.0 })),
    }
}

/// `GrpSum` per orientation.
pub fn grouping_activity(masks: &Masks, b: &BorderOwnership, vm: &VonMisesBank, w_p: f64) -> PerTheta {
    per_theta(|i| {
        let drive_l = masks.left[i].zip_with(&b.left[i], |m, x| m * x);
        let inhib_l = masks.left[i].zip_with(&b.right[i], |m, x| m * x);
        let drive_r = masks.right[i].zip_with(&b.right[i], |m, x| m * x);
        let inhib_r = masks.right[i].zip_with(&b.left[i], |m, x| m * x);
        let src_l = drive_l.zip_with(&inhib_l, |d, n| d - w_p * n);
        let src_r = drive_r.zip_with(&inhib_r, |d, n| d - w_p * n);
        let mut grp = convolve(&src_l, &vm.left[i]);
        grp.add_assign(&convolve(&src_r, &vm.right[i]));
        grp
    })
}

/// Per-level intermediate fields of one channel.
#[derive(Clone, Debug)]
pub struct LevelGrouping {
    pub edges: PerTheta,
    pub on: FieldMap,
    pub off: FieldMap,
    pub ownership: BorderOwnership,
    pub masks: Masks,
    pub grp_sum: PerTheta,
}

/// Grouping of one channel across its pyramid.
#[derive(Clone, Debug)]
pub struct GroupingField {
    pub levels: Vec<LevelGrouping>,
    pub kind: PyramidKind,
}

impl GroupingField {
    pub fn grp_sums(&self) -> Vec<PerTheta> {
        self.levels.iter().map(|l| l.grp_sum.clone()).collect()
    }

    pub fn channel_pyramid(&self, orientation: Option<usize>) -> ImagePyramid {
        channel_pyramid(&self.grp_sums(), orientation, self.kind)
    }
}

/// Per-level channel map `rect(sum_theta GrpSum)`, or `rect(GrpSum_theta)`
/// when a single orientation is selected.
pub fn channel_pyramid(levels: &[PerTheta], orientation: Option<usize>, kind: PyramidKind) -> ImagePyramid {
    let maps = levels
        .iter()
        .map(|grp| match orientation {
            Some(i) => grp[i].rectified(),
            None => {
                let mut s = grp[0].clone();
                for g in &grp[1..] {
                    s.add_assign(g);
                }
                s.rectified()
            }
        })
        .collect();
    ImagePyramid::from_levels(maps, kind).expect("same geometry as the input pyramid")
}

/// Runs the full grouping stage on one channel's pyramid.
pub fn group_pyramid(pyr: &ImagePyramid, bank: &KernelBank, w_p: f64) -> Result<GroupingField> {
    let front: Vec<(PerTheta, FieldMap, FieldMap)> = pyr
        .levels()
        .par_iter()
        .map(|m| {
            let e = complex_edges(m, &bank.edge);
            let (on, off) = center_surround(m, &bank.center_surround);
            (e, on, off)
        })
        .collect();
    let on_vm: Vec<SideFields> = front.par_iter().map(|(_, on, _)| von_mises_filter(on, &bank.von_mises)).collect();
    let off_vm: Vec<SideFields> = front.par_iter().map(|(_, _, off)| von_mises_filter(off, &bank.von_mises)).collect();
    let on_sum = side_fields_sum(&on_vm, pyr.kind());
    let off_sum = side_fields_sum(&off_vm, pyr.kind());
    let levels = front
        .into_par_iter()
        .zip(on_sum.into_par_iter().zip(off_sum.into_par_iter()))
        .map(|((edges, on, off), (ons, offs))| {
            let ownership = border_ownership(&edges, &ons, &offs)?;
            let masks = bo_masks(&ownership);
            let grp_sum = grouping_activity(&masks, &ownership, &bank.von_mises, w_p);
            Ok(LevelGrouping {
                edges,
                on,
                off,
                ownership,
                masks,
                grp_sum,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupingField {
        levels,
        kind: pyr.kind(),
    })
}
