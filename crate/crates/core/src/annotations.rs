//! Polygon annotation documents: the `{image: [{"points": ...}]}` map, GeoJSON
//! FeatureCollections in pixel space, and rasterizing rings to instances.

use crate::error::{Error, Result};
use crate::extract::{PolygonInstance, PolygonSet};
use crate::raster::InstanceMap;
use crate::targets::{rasterize_polygon, PolygonRing};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

pub type Annotations = BTreeMap<String, Vec<PolygonRing>>;

fn bad(image: &str, index: usize, reason: impl Into<String>) -> Error {
    Error::Annotation {
        image: image.to_string(),
        index,
        reason: reason.into(),
    }
}

fn parse_points(image: &str, index: usize, v: &Value) -> Result<PolygonRing> {
    let arr = v
        .as_array()
        .ok_or_else(|| bad(image, index, "points must be an array"))?;
    let mut pts = Vec::with_capacity(arr.len());
    for (k, p) in arr.iter().enumerate() {
        let pair = p.as_array().filter(|a| a.len() >= 2);
        let (x, y) = match pair.map(|a| (a[0].as_f64(), a[1].as_f64())) {
            Some((Some(x), Some(y))) => (x, y),
            _ => {
                return Err(bad(
                    image,
                    index,
                    format!("point {k} is not an [x, y] number pair"),
                ))
            }
        };
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
            return Err(bad(
                image,
                index,
                format!("point {k} ({x}, {y}) out of range"),
            ));
        }
        pts.push((x, y));
    }
    // GeoJSON rings repeat the first vertex at the end.
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 3 {
        return Err(bad(
            image,
            index,
            format!("ring has {} distinct points, need 3", pts.len()),
        ));
    }
    Ok(PolygonRing { vertices: pts })
}

/// Parses either annotation format. GeoJSON features are grouped by their
/// `image_id` property, falling back to a top-level `image_id` member and then
/// to `default_image`.
pub fn ingest_annotations(text: &str, default_image: &str) -> Result<Annotations> {
    let doc: Value = serde_json::from_str(text)?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Format("annotation document must be a JSON object".into()))?;
    if obj.get("type").and_then(Value::as_str) == Some("FeatureCollection") {
        return ingest_geojson(obj, default_image);
    }
    let mut out = Annotations::new();
    for (image, polys) in obj {
        let list = polys
            .as_array()
            .ok_or_else(|| bad(image, 0, "polygon list must be an array"))?;
        let rings = list
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let pts = p
                    .get("points")
                    .ok_or_else(|| bad(image, i, "missing \"points\""))?;
                parse_points(image, i, pts)
            })
            .collect::<Result<Vec<_>>>()?;
        out.insert(image.clone(), rings);
    }
    Ok(out)
}

fn ingest_geojson(obj: &Map<String, Value>, default_image: &str) -> Result<Annotations> {
    let fallback = obj
        .get("image_id")
        .and_then(Value::as_str)
        .unwrap_or(default_image);
    let features = obj
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("FeatureCollection without a features array".into()))?;
    let mut out = Annotations::new();
    for (fi, f) in features.iter().enumerate() {
        let image = f
            .pointer("/properties/image_id")
            .and_then(Value::as_str)
            .unwrap_or(fallback)
            .to_string();
        let index = out.get(&image).map_or(0, Vec::len);
        let geom = f
            .get("geometry")
            .ok_or_else(|| bad(&image, index, format!("feature {fi} has no geometry")))?;
        if geom.get("type").and_then(Value::as_str) != Some("Polygon") {
            return Err(bad(&image, index, format!("feature {fi} is not a Polygon")));
        }
        let exterior = geom
            .pointer("/coordinates/0")
            .ok_or_else(|| bad(&image, index, format!("feature {fi} has no exterior ring")))?;
        let ring = parse_points(&image, index, exterior)?;
        out.entry(image).or_default().push(ring);
    }
    Ok(out)
}

/// FeatureCollection with one Polygon feature per instance; the ring is
/// closed and `image_id`, `height` and `width` ride along as top-level members.
pub fn polygon_set_to_geojson(set: &PolygonSet) -> Value {
    let features: Vec<Value> = set
        .instances
        .iter()
        .map(|inst| {
            let mut ring: Vec<Value> = inst
                .exterior
                .vertices
                .iter()
                .map(|&(x, y)| json!([x, y]))
                .collect();
            if let Some(first) = ring.first().cloned() {
                ring.push(first);
            }
            json!({
                "type": "Feature",
                "properties": { "id": inst.id, "area_px": inst.area_px },
                "geometry": { "type": "Polygon", "coordinates": [ring] },
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "image_id": set.image_id,
        "height": set.height,
        "width": set.width,
        "features": features,
    })
}

/// Reads a FeatureCollection written by [`polygon_set_to_geojson`] or any
/// pixel-space collection carrying `height` and `width` members. Missing ids
/// and areas are filled from feature order and rasterized fill.
pub fn polygon_set_from_geojson(text: &str) -> Result<PolygonSet> {
    let doc: Value = serde_json::from_str(text)?;
    let dim = |k: &str| {
        doc.get(k)
            .and_then(Value::as_u64)
            .filter(|&v| v > 0)
            .map(|v| v as usize)
            .ok_or_else(|| Error::Format(format!("GeoJSON missing positive integer \"{k}\"")))
    };
    let (height, width) = (dim("height")?, dim("width")?);
    let image_id = doc
        .get("image_id")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("FeatureCollection without a features array".into()))?;
    let mut instances = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let exterior = f
            .pointer("/geometry/coordinates/0")
            .ok_or_else(|| bad(&image_id, i, "feature has no exterior ring"))?;
        let ring = parse_points(&image_id, i, exterior)?;
        let id = f
            .pointer("/properties/id")
            .and_then(Value::as_u64)
            .map_or(i as u32 + 1, |v| v as u32);
        let area_px = match f.pointer("/properties/area_px").and_then(Value::as_u64) {
            Some(a) => a as usize,
            None => rasterize_polygon(&ring, height, width)?.count(),
        };
        instances.push(PolygonInstance {
            id,
            exterior: ring,
            area_px,
        });
    }
    Ok(PolygonSet {
        image_id,
        height,
        width,
        instances,
    })
}

/// Rasterizes rings in order, each to its own label; later rings overwrite
/// earlier ones where they overlap. Labels are renumbered by anchor pixel.
pub fn rings_to_instances(
    rings: &[PolygonRing],
    height: usize,
    width: usize,
) -> Result<InstanceMap> {
    let mut labels = vec![0u32; height * width];
    for (i, ring) in rings.iter().enumerate() {
        let m = rasterize_polygon(ring, height, width)?;
        for (l, &v) in labels.iter_mut().zip(m.data()) {
            if v != 0 {
                *l = i as u32 + 1;
            }
        }
    }
    InstanceMap::from_sparse(height, width, labels)
}
