//! Rooms, walls, furniture objects and the shared shortest-distance function.
//!
//! Boxes are axis-aligned in the room frame. The floor lies in the (x, y)
//! plane and z points up; a room is a closed loop of wall segments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point2, Polygon2, Rect2, Segment2};

/// Coarse furniture category. Each category gets its own model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FurnitureGroup {
    Bed,
    Chair,
    Decor,
    Picture,
    Sofa,
    Storage,
    Table,
    #[serde(rename = "TV")]
    Tv,
}

impl FurnitureGroup {
    pub const COUNT: usize = 8;

    pub const ALL: [FurnitureGroup; 8] = [
        FurnitureGroup::Bed,
        FurnitureGroup::Chair,
        FurnitureGroup::Decor,
        FurnitureGroup::Picture,
        FurnitureGroup::Sofa,
        FurnitureGroup::Storage,
        FurnitureGroup::Table,
        FurnitureGroup::Tv,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            FurnitureGroup::Bed => "Bed",
            FurnitureGroup::Chair => "Chair",
            FurnitureGroup::Decor => "Decor",
            FurnitureGroup::Picture => "Picture",
            FurnitureGroup::Sofa => "Sofa",
            FurnitureGroup::Storage => "Storage",
            FurnitureGroup::Table => "Table",
            FurnitureGroup::Tv => "TV",
        }
    }
}

impl fmt::Display for FurnitureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FurnitureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParam(format!("unknown furniture group `{s}`")))
    }
}

/// Axis-aligned 3D box in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox3 {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for axis in 0..3 {
            if !min[axis].is_finite() || !max[axis].is_finite() {
                return Err(Error::Geometry("non-finite box coordinate".into()));
            }
            if min[axis] > max[axis] {
                return Err(Error::Geometry(format!(
                    "box min exceeds max on axis {axis}: {} > {}",
                    min[axis], max[axis]
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Box of the given (length, width, height) whose footprint is centered
    /// at `center` and whose bottom sits at `bottom`.
    pub fn centered(center: Point2, bottom: f64, dims: [f64; 3]) -> Self {
        Self {
            min: [center.x - dims[0] / 2.0, center.y - dims[1] / 2.0, bottom],
            max: [center.x + dims[0] / 2.0, center.y + dims[1] / 2.0, bottom + dims[2]],
        }
    }

    /// Extent along x.
    pub fn length(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    /// Extent along y.
    pub fn width(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn height(&self) -> f64 {
        self.max[2] - self.min[2]
    }

    pub fn dims(&self) -> [f64; 3] {
        [self.length(), self.width(), self.height()]
    }

    pub fn volume(&self) -> f64 {
        self.length() * self.width() * self.height()
    }

    pub fn top(&self) -> f64 {
        self.max[2]
    }

    pub fn bottom(&self) -> f64 {
        self.min[2]
    }

    pub fn centroid(&self) -> [f64; 3] {
        [(self.min[0] + self.max[0]) / 2.0, (self.min[1] + self.max[1]) / 2.0, (self.min[2] + self.max[2]) / 2.0]
    }

    pub fn centroid_xy(&self) -> Point2 {
        let c = self.centroid();
        Point2::new(c[0], c[1])
    }

    /// Ground projection.
    pub fn footprint(&self) -> Rect2 {
        Rect2::new(Point2::new(self.min[0], self.min[1]), Point2::new(self.max[0], self.max[1]))
    }

    /// Footprint diagonal, the proximity radius used by the surrounded-by relation.
    pub fn footprint_diagonal(&self) -> f64 {
        self.length().hypot(self.width())
    }

    pub fn translated(&self, d: [f64; 3]) -> Self {
        Self {
            min: [self.min[0] + d[0], self.min[1] + d[1], self.min[2] + d[2]],
            max: [self.max[0] + d[0], self.max[1] + d[1], self.max[2] + d[2]],
        }
    }

    pub fn intersection_volume(&self, o: &BoundingBox3) -> f64 {
        (0..3).map(|a| (self.max[a].min(o.max[a]) - self.min[a].max(o.min[a])).max(0.0)).product()
    }

    pub fn point_distance(&self, p: [f64; 3]) -> f64 {
        (0..3)
            .map(|a| {
                let g = (self.min[a] - p[a]).max(0.0).max(p[a] - self.max[a]);
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    pub group: FurnitureGroup,
    pub bbox: BoundingBox3,
}

impl SceneObject {
    pub fn new(id: impl Into<String>, group: FurnitureGroup, bbox: BoundingBox3) -> Self {
        Self { id: id.into(), group, bbox }
    }

    pub fn centroid(&self) -> [f64; 3] {
        self.bbox.centroid()
    }

    pub fn centroid_xy(&self) -> Point2 {
        self.bbox.centroid_xy()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub id: String,
    pub segment: Segment2,
}

/// A room: an ordered closed loop of walls plus the furniture inside.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    id: String,
    room_type: String,
    floor: Polygon2,
    walls: Vec<Wall>,
    objects: Vec<SceneObject>,
}

impl Scene {
    /// Builds a room from its wall loop. The loop is implicitly closed: wall
    /// `i` runs from vertex `i` to vertex `i + 1 (mod n)`.
    pub fn new(
        id: impl Into<String>,
        room_type: impl Into<String>,
        loop_vertices: Vec<Point2>,
        objects: Vec<SceneObject>,
    ) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: String| Error::InvalidScene { scene: id.clone(), reason };
        if loop_vertices.len() < 3 {
            return Err(invalid(format!("{} walls, need at least 3", loop_vertices.len())));
        }
        if loop_vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(invalid("non-finite wall vertex".into()));
        }
        let floor = Polygon2::new(loop_vertices);
        if !floor.is_simple() {
            return Err(invalid("wall loop is not a simple polygon".into()));
        }
        let b = floor.bounds();
        if b.width() <= 0.0 || b.height() <= 0.0 || floor.area() <= 0.0 {
            return Err(invalid("room has zero extent".into()));
        }
        let walls = floor.edges().enumerate().map(|(i, segment)| Wall { id: format!("wall_{i}"), segment }).collect();
        Ok(Self { id, room_type: room_type.into(), floor, walls, objects })
    }

    /// Rectangular room `[0, length] x [0, width]`, counter-clockwise.
    pub fn rectangle(id: impl Into<String>, length: f64, width: f64, objects: Vec<SceneObject>) -> Result<Self> {
        Self::new(
            id,
            "room",
            vec![Point2::new(0.0, 0.0), Point2::new(length, 0.0), Point2::new(length, width), Point2::new(0.0, width)],
            objects,
        )
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn room_type(&self) -> &str {
        &self.room_type
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn floor(&self) -> &Polygon2 {
        &self.floor
    }

    pub fn bounds(&self) -> Rect2 {
        self.floor.bounds()
    }

    /// Area centroid of the wall polygon.
    pub fn center(&self) -> Point2 {
        self.floor.centroid()
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        self.floor.contains(p)
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn with_id(&self, id: impl Into<String>) -> Scene {
        Scene { id: id.into(), ..self.clone() }
    }

    pub fn with_objects(&self, objects: Vec<SceneObject>) -> Scene {
        Scene { objects, ..self.clone() }
    }

    pub fn without_object(&self, id: &str) -> Scene {
        self.with_objects(self.objects.iter().filter(|o| o.id != id).cloned().collect())
    }

    /// Same room with every wall vertex and object shifted by `d`.
    pub fn translated(&self, d: [f64; 3]) -> Scene {
        let verts = self.floor.vertices.iter().map(|p| Point2::new(p.x + d[0], p.y + d[1])).collect();
        let objects = self.objects.iter().map(|o| SceneObject { bbox: o.bbox.translated(d), ..o.clone() }).collect();
        Scene::new(self.id.clone(), self.room_type.clone(), verts, objects).expect("translation keeps validity")
    }
}

/// Shortest Euclidean distance between two closed boxes; 0 when they intersect.
pub fn bbox_distance(a: &BoundingBox3, b: &BoundingBox3) -> f64 {
    let mut s = 0.0;
    for axis in 0..3 {
        let gap = (a.min[axis] - b.max[axis]).max(b.min[axis] - a.max[axis]).max(0.0);
        s += gap * gap;
    }
    s.sqrt()
}

/// Distance between a box footprint and a wall segment.
pub fn bbox_wall_distance(b: &BoundingBox3, w: &Wall) -> f64 {
    b.footprint().segment_distance(&w.segment)
}

/// Ground-projected footprints overlap or touch.
pub fn bbox_xy_intersects(a: &BoundingBox3, b: &BoundingBox3) -> bool {
    a.footprint().intersects(&b.footprint())
}

/// Default raster resolution for [`open_space_ratio`].
pub const OPEN_SPACE_RESOLUTION: usize = 512;

/// Fraction of the floor not covered by any object footprint, measured on a
/// `resolution x resolution` raster over the room's bounding rectangle.
pub fn open_space_ratio(s: &Scene, resolution: usize) -> Result<f64> {
    if s.floor.area() <= 0.0 {
        return Err(Error::Geometry(format!("room `{}` has a degenerate floor", s.id)));
    }
    let resolution = resolution.max(1);
    let b = s.bounds();
    let cw = b.width() / resolution as f64;
    let ch = b.height() / resolution as f64;
    let footprints: Vec<Rect2> = s.objects.iter().map(|o| o.bbox.footprint()).collect();

    // Cell index range whose centers fall in [lo, hi].
    let cell_range = |lo: f64, hi: f64| -> Option<(usize, usize)> {
        let first = ((lo - b.min.x) / cw - 0.5).ceil().max(0.0);
        let last = ((hi - b.min.x) / cw - 0.5).floor().min(resolution as f64 - 1.0);
        (first <= last).then_some((first as usize, last as usize))
    };

    let mut floor_cells = 0usize;
    let mut occupied_cells = 0usize;
    let mut floor_row = vec![false; resolution];
    let mut occ_row = vec![false; resolution];
    for j in 0..resolution {
        let y = b.min.y + (j as f64 + 0.5) * ch;
        floor_row.iter_mut().for_each(|c| *c = false);
        occ_row.iter_mut().for_each(|c| *c = false);
        for pair in s.floor.scanline_crossings(y).chunks_exact(2) {
            if let Some((i0, i1)) = cell_range(pair[0], pair[1]) {
                floor_row[i0..=i1].iter_mut().for_each(|c| *c = true);
            }
        }
        for r in footprints.iter().filter(|r| r.min.y <= y && y <= r.max.y) {
            if let Some((i0, i1)) = cell_range(r.min.x, r.max.x) {
                occ_row[i0..=i1].iter_mut().for_each(|c| *c = true);
            }
        }
        for i in 0..resolution {
            if floor_row[i] {
                floor_cells += 1;
                if occ_row[i] {
                    occupied_cells += 1;
                }
            }
        }
    }
    if floor_cells == 0 {
        return Err(Error::Geometry(format!("room `{}` covers no raster cell", s.id)));
    }
    Ok(1.0 - occupied_cells as f64 / floor_cells as f64)
}

/// Box for a hypothetical object whose footprint is centered at `center`.
///
/// The bottom rests on the floor unless the footprint overlaps an object
/// whose top is at most `support_height_max`; then it hovers half the support
/// threshold above the highest such top so the support relation registers.
pub fn resting_bbox(
    scene: &Scene,
    center: Point2,
    dims: [f64; 3],
    support_height_max: f64,
    support_tau: f64,
) -> BoundingBox3 {
    let probe = BoundingBox3::centered(center, 0.0, dims);
    let support = scene
        .objects
        .iter()
        .filter(|o| o.bbox.top() <= support_height_max && o.bbox.top() > 0.0)
        .filter(|o| bbox_xy_intersects(&probe, &o.bbox))
        .map(|o| o.bbox.top())
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))));
    match support {
        Some(top) => BoundingBox3::centered(center, top + support_tau / 2.0, dims),
        None => BoundingBox3::centered(center, 0.0, dims),
    }
}
