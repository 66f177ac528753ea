use std::collections::{HashMap, VecDeque};

use super::{GeoTransform, InstanceError, InstanceLabelMap};
use crate::geometry::{FootprintPolygon, Point2};

type Vertex = (i64, i64);

/// A unit crack between an instance pixel and a non-instance pixel, directed
/// so the pixel is on the right when drawn with rows growing downward.
#[derive(Clone, Copy)]
struct Crack {
    from: Vertex,
    to: Vertex,
    pixel: usize,
}

/// Traces the outline of instance `k` on pixel corners and maps it through
/// `geo`.
///
/// The outline follows 4-connectivity: pixels touching only at a corner are
/// kept apart. If the instance has several 4-connected parts, the largest
/// (earliest in scan order on ties) is traced. Enclosed background becomes
/// holes. Collinear vertices are dropped, so a filled rectangle of pixels
/// yields four corners.
pub fn trace_polygon(labels: &InstanceLabelMap, k: u32, geo: &GeoTransform) -> Result<FootprintPolygon, InstanceError> {
    let (w, h) = (labels.width(), labels.height());
    let lab = labels.labels();
    if k == 0 || !lab.contains(&k) {
        return Err(InstanceError::NotFound(k));
    }
    let part = largest_part(lab, w, h, k);
    let inside = |c: i64, r: i64| -> bool {
        c >= 0 && r >= 0 && (c as usize) < w && (r as usize) < h && part[r as usize * w + c as usize]
    };

    let mut cracks: Vec<Crack> = Vec::new();
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            if !inside(c, r) {
                continue;
            }
            let pixel = r as usize * w + c as usize;
            if !inside(c, r - 1) {
                cracks.push(Crack { from: (c, r), to: (c + 1, r), pixel });
            }
            if !inside(c + 1, r) {
                cracks.push(Crack { from: (c + 1, r), to: (c + 1, r + 1), pixel });
            }
            if !inside(c, r + 1) {
                cracks.push(Crack { from: (c + 1, r + 1), to: (c, r + 1), pixel });
            }
            if !inside(c - 1, r) {
                cracks.push(Crack { from: (c, r + 1), to: (c, r), pixel });
            }
        }
    }

    let mut outgoing: HashMap<Vertex, Vec<usize>> = HashMap::with_capacity(cracks.len());
    for (i, cr) in cracks.iter().enumerate() {
        outgoing.entry(cr.from).or_default().push(i);
    }
    // At a corner pinch two cracks leave the same vertex; staying on the same
    // pixel keeps diagonal neighbors apart.
    let successor = |i: usize| -> usize {
        let out = &outgoing[&cracks[i].to];
        if out.len() == 1 {
            out[0]
        } else {
            *out.iter().find(|&&j| cracks[j].pixel == cracks[i].pixel).unwrap_or(&out[0])
        }
    };

    let mut visited = vec![false; cracks.len()];
    let mut rings: Vec<Vec<Vertex>> = Vec::new();
    for start in 0..cracks.len() {
        if visited[start] {
            continue;
        }
        let mut seq = Vec::new();
        let mut i = start;
        loop {
            visited[i] = true;
            seq.push(cracks[i].from);
            i = successor(i);
            if i == start {
                break;
            }
        }
        split_touching(&seq, &mut rings);
    }

    let mut exterior: Option<(i64, Vec<Vertex>)> = None;
    let mut holes: Vec<Vec<Vertex>> = Vec::new();
    for ring in rings {
        let ring = drop_collinear(ring);
        let a2 = twice_area(&ring);
        if a2 > 0 {
            if exterior.as_ref().map_or(true, |(best, _)| a2 > *best) {
                exterior = Some((a2, ring));
            }
        } else if a2 < 0 {
            holes.push(ring);
        }
    }
    let (_, exterior) = exterior.expect("non-empty instance has an outer boundary");

    let to_world = |ring: Vec<Vertex>| -> Vec<Point2> {
        ring.into_iter().map(|(c, r)| geo.apply(c as f64, r as f64)).collect()
    };
    Ok(FootprintPolygon::new(k.to_string(), to_world(exterior), holes.into_iter().map(to_world).collect())?)
}

/// Largest 4-connected part of instance `k`, as a full-size membership mask.
fn largest_part(lab: &[u32], w: usize, h: usize, k: u32) -> Vec<bool> {
    let mut part_id = vec![0u32; lab.len()];
    let mut sizes: Vec<usize> = vec![0];
    let mut queue = VecDeque::new();
    for start in 0..lab.len() {
        if lab[start] != k || part_id[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32;
        sizes.push(0);
        part_id[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            sizes[id as usize] += 1;
            let (c, r) = (p % w, p / w);
            let mut visit = |q: usize| {
                if lab[q] == k && part_id[q] == 0 {
                    part_id[q] = id;
                    queue.push_back(q);
                }
            };
            if r > 0 {
                visit(p - w);
            }
            if c > 0 {
                visit(p - 1);
            }
            if c + 1 < w {
                visit(p + 1);
            }
            if r + 1 < h {
                visit(p + w);
            }
        }
    }
    let mut best = 1u32;
    for (id, &size) in sizes.iter().enumerate().skip(1) {
        if size > sizes[best as usize] {
            best = id as u32;
        }
    }
    part_id.iter().map(|&id| id == best).collect()
}

/// Splits a closed vertex loop that revisits vertices into simple loops.
fn split_touching(seq: &[Vertex], out: &mut Vec<Vec<Vertex>>) {
    let mut stack: Vec<Vertex> = Vec::with_capacity(seq.len());
    let mut position: HashMap<Vertex, usize> = HashMap::new();
    for &v in seq {
        if let Some(&i) = position.get(&v) {
            let ring: Vec<Vertex> = stack[i..].to_vec();
            for u in &stack[i + 1..] {
                position.remove(u);
            }
            stack.truncate(i + 1);
            out.push(ring);
        } else {
            position.insert(v, stack.len());
            stack.push(v);
        }
    }
    if stack.len() >= 3 {
        out.push(stack);
    }
}

fn drop_collinear(ring: Vec<Vertex>) -> Vec<Vertex> {
    let n = ring.len();
    (0..n)
        .filter(|&i| {
            let p = ring[(i + n - 1) % n];
            let q = ring[i];
            let r = ring[(i + 1) % n];
            (q.0 - p.0) * (r.1 - q.1) - (q.1 - p.1) * (r.0 - q.0) != 0
        })
        .map(|i| ring[i])
        .collect()
}

/// Twice the shoelace area in pixel coordinates (rows down): outer
/// boundaries come out positive, holes negative.
fn twice_area(ring: &[Vertex]) -> i64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.0 * b.1 - a.1 * b.0
        })
        .sum()
}
