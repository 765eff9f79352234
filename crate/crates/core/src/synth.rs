//! Rule-based synthetic rooms.
//!
//! Every room is a rectangle with a Bed pushed into one corner and a
//! different item in each of the other three corners, so exactly one corner
//! is free of large furniture. A Table stands away from the walls with a
//! Chair on each of its two long sides. Some rooms get a low cabinet with a
//! TV on top.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{Point2, Rect2};
use crate::scene::{BoundingBox3, FurnitureGroup, Scene, SceneObject};
use crate::seeds::rng_for;

const WALL_GAP: f64 = 0.02;
const CLEARANCE: f64 = 0.3;
/// Chairs stand this far (range, meters) from the table edge.
const CHAIR_GAP: (f64, f64) = (0.1, 0.3);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub length: (f64, f64),
    pub width: (f64, f64),
    /// Probability that a corner item is a low cabinet carrying a TV.
    pub tv_probability: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self { length: (4.5, 6.0), width: (4.0, 5.0), tv_probability: 0.3 }
    }
}

/// `n` rooms, each drawn from its own seed stream.
pub fn generate_corpus(n: usize, seed: u64, p: &SynthParams) -> Result<Vec<Scene>> {
    (0..n).map(|i| generate_room(&format!("synth_{i:04}"), seed, p)).collect()
}

pub fn generate_room(id: &str, seed: u64, p: &SynthParams) -> Result<Scene> {
    let mut rng = rng_for(seed, &["synth", id]);
    for _ in 0..100 {
        if let Some(objects) = try_layout(&mut rng, p) {
            let (l, w) = objects.0;
            return Scene::rectangle(id, l, w, objects.1);
        }
    }
    Err(Error::SamplingExhausted(100))
}

fn boxed(id: &str, g: FurnitureGroup, min: Point2, size: (f64, f64), bottom: f64, height: f64) -> SceneObject {
    let bbox = BoundingBox3 { min: [min.x, min.y, bottom], max: [min.x + size.0, min.y + size.1, bottom + height] };
    SceneObject::new(id, g, bbox)
}

/// Footprint of size `(sx, sy)` tucked into corner `c` of an `l x w` room.
fn corner_origin(c: usize, l: f64, w: f64, sx: f64, sy: f64) -> Point2 {
    let x = if c == 1 || c == 2 { l - WALL_GAP - sx } else { WALL_GAP };
    let y = if c >= 2 { w - WALL_GAP - sy } else { WALL_GAP };
    Point2::new(x, y)
}

fn grow(r: &Rect2, d: f64) -> Rect2 {
    Rect2::new(Point2::new(r.min.x - d, r.min.y - d), Point2::new(r.max.x + d, r.max.y + d))
}

type Layout = ((f64, f64), Vec<SceneObject>);

fn try_layout(rng: &mut ChaCha8Rng, p: &SynthParams) -> Option<Layout> {
    let l = rng.gen_range(p.length.0..p.length.1);
    let w = rng.gen_range(p.width.0..p.width.1);
    let mut objects = Vec::new();

    let bed_corner = rng.gen_range(0..4);
    let (bl, bw) = (rng.gen_range(1.9..2.1), rng.gen_range(1.4..1.7));
    let size = if rng.gen_bool(0.5) { (bl, bw) } else { (bw, bl) };
    objects.push(boxed("bed", FurnitureGroup::Bed, corner_origin(bed_corner, l, w, size.0, size.1), size, 0.0, 0.55));

    let mut tv_done = false;
    for (k, c) in (0..4).filter(|c| *c != bed_corner).enumerate() {
        let choice = rng.gen_range(0..3);
        let low_cabinet = !tv_done && rng.gen_bool(p.tv_probability);
        if low_cabinet {
            let size = if rng.gen_bool(0.5) { (1.2, 0.45) } else { (0.45, 1.2) };
            let cab = boxed(
                &format!("storage_{k}"),
                FurnitureGroup::Storage,
                corner_origin(c, l, w, size.0, size.1),
                size,
                0.0,
                0.6,
            );
            if objects.iter().any(|o| o.bbox.footprint().intersects(&cab.bbox.footprint())) {
                return None;
            }
            let fp = cab.bbox.footprint();
            let tv_size = if size.0 > size.1 { (0.9, 0.2) } else { (0.2, 0.9) };
            let tv_min = Point2::new((fp.min.x + fp.max.x - tv_size.0) / 2.0, (fp.min.y + fp.max.y - tv_size.1) / 2.0);
            objects.push(cab);
            objects.push(boxed("tv", FurnitureGroup::Tv, tv_min, tv_size, 0.6 + 0.02, 0.55));
            tv_done = true;
            continue;
        }
        let (g, sx, sy, h) = match choice {
            0 => (FurnitureGroup::Storage, 1.0, 0.6, 1.9),
            1 => (FurnitureGroup::Sofa, 1.9, 0.9, 0.8),
            _ => (FurnitureGroup::Decor, 0.5, 0.5, 1.2),
        };
        let size = if rng.gen_bool(0.5) { (sx, sy) } else { (sy, sx) };
        let id = format!("{}_{k}", g.label().to_lowercase());
        let item = boxed(&id, g, corner_origin(c, l, w, size.0, size.1), size, 0.0, h);
        if objects.iter().any(|o| o.bbox.footprint().intersects(&item.bbox.footprint())) {
            return None;
        }
        objects.push(item);
    }

    let tl = rng.gen_range(1.0..1.4);
    let tw = rng.gen_range(0.7..0.9);
    let along_x = rng.gen_bool(0.5);
    let (tsx, tsy) = if along_x { (tl, tw) } else { (tw, tl) };
    let chair = 0.45;
    // Chairs sit beyond the long sides, so the group extends across the short axis.
    let gap = rng.gen_range(CHAIR_GAP.0..CHAIR_GAP.1);
    let (gx, gy) = if along_x { (tsx, tsy + 2.0 * (gap + chair)) } else { (tsx + 2.0 * (gap + chair), tsy) };
    let placed: Vec<Rect2> = objects.iter().map(|o| grow(&o.bbox.footprint(), CLEARANCE)).collect();
    for _ in 0..200 {
        let lo = CLEARANCE + gx / 2.0;
        let hi = l - CLEARANCE - gx / 2.0;
        let lo_y = CLEARANCE + gy / 2.0;
        let hi_y = w - CLEARANCE - gy / 2.0;
        if lo >= hi || lo_y >= hi_y {
            return None;
        }
        let c = Point2::new(rng.gen_range(lo..hi), rng.gen_range(lo_y..hi_y));
        let group =
            Rect2::new(Point2::new(c.x - gx / 2.0, c.y - gy / 2.0), Point2::new(c.x + gx / 2.0, c.y + gy / 2.0));
        if placed.iter().any(|r| r.intersects(&group)) {
            continue;
        }
        let table_min = Point2::new(c.x - tsx / 2.0, c.y - tsy / 2.0);
        objects.push(boxed("table", FurnitureGroup::Table, table_min, (tsx, tsy), 0.0, 0.75));
        let off = tw / 2.0 + gap + chair / 2.0;
        let shift = rng.gen_range(-0.15..0.15) * (tl - chair);
        let centers = if along_x {
            [Point2::new(c.x + shift, c.y - off), Point2::new(c.x - shift, c.y + off)]
        } else {
            [Point2::new(c.x - off, c.y + shift), Point2::new(c.x + off, c.y - shift)]
        };
        for (i, cc) in centers.iter().enumerate() {
            let min = Point2::new(cc.x - chair / 2.0, cc.y - chair / 2.0);
            objects.push(boxed(&format!("chair_{i}"), FurnitureGroup::Chair, min, (chair, chair), 0.0, 0.9));
        }
        return Some(((l, w), objects));
    }
    None
}
