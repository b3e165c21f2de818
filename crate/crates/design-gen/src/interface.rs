use serde::{Deserialize, Serialize};
use voxel_core::{flat_index, Axis, Dims, VoxelGrid};

use crate::noise::{fbm3, NoiseParams};
use crate::GenError;

/// Inclusive 1-based coordinate ranges of an axis-aligned box.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoxelBox {
    pub j: (u32, u32),
    pub k: (u32, u32),
    pub l: (u32, u32),
}

impl VoxelBox {
    pub fn new(j: (u32, u32), k: (u32, u32), l: (u32, u32)) -> Self {
        VoxelBox { j, k, l }
    }

    fn check(&self, dims: Dims, name: &str) -> Result<(), GenError> {
        for (axis, (lo, hi), max) in [
            ("j", self.j, dims.j_max),
            ("k", self.k, dims.k_max),
            ("l", self.l, dims.l_max),
        ] {
            if lo < 1 || hi < lo || hi > max {
                return Err(GenError::BadSpec(format!(
                    "region {name:?}: {axis} range {lo}..={hi} outside 1..={max}"
                )));
            }
        }
        Ok(())
    }

    fn for_each_index(&self, dims: Dims, mut f: impl FnMut(usize)) {
        for l in self.l.0..=self.l.1 {
            for k in self.k.0..=self.k.1 {
                for j in self.j.0..=self.j.1 {
                    f(flat_index(dims, j, k, l).expect("box validated against dims"));
                }
            }
        }
    }
}

/// Whether a region forces material or forbids it.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    MaterialMandatory,
    VoidMandatory,
}

/// Named group of boxes sharing one stamping rule.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub name: String,
    pub kind: RegionKind,
    pub boxes: Vec<VoxelBox>,
}

/// Fixed geometry every design must expose: mounting material that later
/// parts bolt to, and open faces air must be able to enter and leave by.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceSpec {
    pub regions: Vec<Region>,
    /// Airflow direction for the flow-through constraint: inlet at
    /// coordinate 1, outlet at the far plane.
    #[serde(with = "axis_serde")]
    pub flow_axis: Axis,
}

mod axis_serde {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};
    use voxel_core::Axis;

    pub fn serialize<S: Serializer>(axis: &Axis, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&axis.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Axis, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl InterfaceSpec {
    /// Default layout for a duct-like space with flow along `k`: an engine
    /// mount centred on the inlet face, two attachment pads on the outlet
    /// side at the `j` extremes, and open strips at the `l` extremes of both
    /// flow faces. Requires at least 6 voxels per axis.
    pub fn default_for(dims: Dims) -> Result<Self, GenError> {
        let (jm, km, lm) = (dims.j_max, dims.k_max, dims.l_max);
        if jm < 6 || km < 6 || lm < 6 {
            return Err(GenError::BadSpec(format!(
                "default interface layout needs at least 6x6x6 voxels, got {jm}x{km}x{lm}"
            )));
        }
        let l_mid = (lm / 3 + 1, 2 * lm / 3);
        let strip = lm / 6;
        let l_low = (1, strip);
        let l_high = (lm - strip + 1, lm);
        let regions = vec![
            Region {
                name: "engine-mount".to_string(),
                kind: RegionKind::MaterialMandatory,
                boxes: vec![VoxelBox::new((jm / 3 + 1, 2 * jm / 3), (1, 2), l_mid)],
            },
            Region {
                name: "attachment-pads".to_string(),
                kind: RegionKind::MaterialMandatory,
                boxes: vec![
                    VoxelBox::new((1, 2), (km - 1, km), l_mid),
                    VoxelBox::new((jm - 1, jm), (km - 1, km), l_mid),
                ],
            },
            Region {
                name: "inlet-openings".to_string(),
                kind: RegionKind::VoidMandatory,
                boxes: vec![
                    VoxelBox::new((1, jm), (1, 1), l_low),
                    VoxelBox::new((1, jm), (1, 1), l_high),
                ],
            },
            Region {
                name: "outlet-openings".to_string(),
                kind: RegionKind::VoidMandatory,
                boxes: vec![
                    VoxelBox::new((1, jm), (km, km), l_low),
                    VoxelBox::new((1, jm), (km, km), l_high),
                ],
            },
        ];
        Ok(InterfaceSpec { regions, flow_axis: Axis::K })
    }

    /// Checks box bounds and that no voxel is both forced-material and
    /// forced-void.
    pub fn validate(&self, dims: Dims) -> Result<(), GenError> {
        for region in &self.regions {
            for b in &region.boxes {
                b.check(dims, &region.name)?;
            }
        }
        let material = self.mask(dims, RegionKind::MaterialMandatory);
        let void = self.mask(dims, RegionKind::VoidMandatory);
        for i in 0..dims.total() {
            if material[i] && void[i] {
                return Err(GenError::BadSpec(format!(
                    "voxel at flat index {i} is both material-mandatory and void-mandatory"
                )));
            }
        }
        Ok(())
    }

    /// Per-voxel flags for one region kind. Boxes must already be validated
    /// against `dims`.
    pub fn mask(&self, dims: Dims, kind: RegionKind) -> Vec<bool> {
        let mut mask = vec![false; dims.total()];
        for region in self.regions.iter().filter(|r| r.kind == kind) {
            for b in &region.boxes {
                b.for_each_index(dims, |i| mask[i] = true);
            }
        }
        mask
    }
}

/// Forces mandatory regions into a grid: material boxes filled, void boxes
/// emptied.
pub fn stamp(grid: &mut VoxelGrid, spec: &InterfaceSpec) -> Result<(), GenError> {
    let dims = grid.dims();
    spec.validate(dims)?;
    for region in &spec.regions {
        let fill = region.kind == RegionKind::MaterialMandatory;
        for b in &region.boxes {
            b.for_each_index(dims, |i| grid.set_flat(i, fill));
        }
    }
    Ok(())
}

/// Draws one raw design: noise is sampled at each voxel centre and
/// thresholded, then the interface geometry is stamped on top. The centre
/// of voxel `(j, k, l)` sits at `(j - 0.5, k - 0.5, l - 0.5)` in lattice
/// units.
pub fn sample_design(
    dims: Dims,
    params: &NoiseParams,
    spec: &InterfaceSpec,
) -> Result<VoxelGrid, GenError> {
    params.validate()?;
    spec.validate(dims)?;
    let mut grid = VoxelGrid::new(dims);
    for l in 1..=dims.l_max {
        for k in 1..=dims.k_max {
            for j in 1..=dims.j_max {
                let centre = [j as f64 - 0.5, k as f64 - 0.5, l as f64 - 0.5];
                if fbm3(centre, params) >= params.fill_threshold {
                    grid.set(j, k, l, true)?;
                }
            }
        }
    }
    stamp(&mut grid, spec)?;
    Ok(grid)
}
