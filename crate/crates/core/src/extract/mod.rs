//! Instance extraction: seeds from border subtraction, nearest-seed
//! assignment, small-instance removal and exterior polygonization.

mod polygonize;
mod watershed;

pub use polygonize::polygonize;
pub use watershed::watershed_assign;

use crate::error::{Error, Result};
use crate::fusion::binarize;
use crate::raster::{connected_components, BinaryMask, Connectivity, InstanceMap, ProbMap};
use crate::targets::PolygonRing;

pub const DEFAULT_MIN_AREA: usize = 140;

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonInstance {
    pub id: u32,
    /// Pixel-corner outline, counter-clockwise in raw (x, y) coordinates.
    pub exterior: PolygonRing,
    pub area_px: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonSet {
    pub image_id: String,
    pub height: usize,
    pub width: usize,
    pub instances: Vec<PolygonInstance>,
}

impl PolygonSet {
    pub fn with_image_id(mut self, id: impl Into<String>) -> Self {
        self.image_id = id.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractParams {
    pub threshold: f32,
    pub min_area: usize,
    /// Remove binarized spacing pixels from the building mask when the map
    /// carries a third channel.
    pub use_spacing: bool,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            threshold: crate::fusion::DEFAULT_THRESHOLD,
            min_area: DEFAULT_MIN_AREA,
            use_spacing: true,
        }
    }
}

/// Building interiors: 8-connected components of `building AND NOT border`.
pub fn make_seeds(building: &BinaryMask, border: &BinaryMask) -> Result<InstanceMap> {
    let interior = building.and_not(border)?;
    Ok(connected_components(&interior, Connectivity::Eight))
}

/// Clears instances smaller than `min_area` pixels and renumbers the rest by anchor.
pub fn filter_small(instances: &InstanceMap, min_area: usize) -> InstanceMap {
    let areas = instances.areas();
    instances.retain(|l| areas[l as usize] >= min_area)
}

/// Connected components of the building mask, filtered, then traced.
pub fn extract_single_class(building: &BinaryMask, min_area: usize) -> (InstanceMap, PolygonSet) {
    let cc = connected_components(building, Connectivity::Eight);
    let kept = filter_small(&cc, min_area);
    let polys = polygonize(&kept);
    (kept, polys)
}

/// Building/border(/spacing) probability map to separated instances.
pub fn extract_multi_class(
    fused: &ProbMap,
    params: &ExtractParams,
) -> Result<(InstanceMap, PolygonSet)> {
    if fused.channels() < 2 {
        return Err(Error::InvalidArgument(format!(
            "multi-class extraction needs building and border channels, got {} channel(s)",
            fused.channels()
        )));
    }
    let mut building = binarize(fused, 0, params.threshold)?;
    let border = binarize(fused, 1, params.threshold)?;
    if params.use_spacing && fused.channels() >= 3 {
        building = building.and_not(&binarize(fused, 2, params.threshold)?)?;
    }
    let seeds = make_seeds(&building, &border)?;
    let instances = watershed_assign(&seeds, &building)?;
    let kept = filter_small(&instances, params.min_area);
    let polys = polygonize(&kept);
    Ok((kept, polys))
}
