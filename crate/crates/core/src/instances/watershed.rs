use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::{InstanceLabelMap, MaskPair};

/// Thresholds are inclusive lower bounds for the building channel and
/// exclusive upper bounds for the border channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WatershedParams {
    pub t_building: u8,
    pub t_border: u8,
    /// Seeds smaller than this many pixels are discarded.
    pub min_seed_area: usize,
}

impl Default for WatershedParams {
    fn default() -> Self {
        Self { t_building: 128, t_border: 128, min_seed_area: 4 }
    }
}

const N4: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
const N8: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

fn neighbors<'a>(
    idx: usize,
    width: usize,
    height: usize,
    offsets: &'a [(isize, isize)],
) -> impl Iterator<Item = usize> + 'a {
    let col = (idx % width) as isize;
    let row = (idx / width) as isize;
    offsets.iter().filter_map(move |&(dc, dr)| {
        let c = col + dc;
        let r = row + dr;
        (c >= 0 && r >= 0 && (c as usize) < width && (r as usize) < height).then(|| r as usize * width + c as usize)
    })
}

/// Connected components of `member` among pixels not yet labeled, in scan
/// order of their first pixel.
fn components(
    member: &[bool],
    labels: &[u32],
    width: usize,
    height: usize,
    offsets: &[(isize, isize)],
) -> Vec<Vec<usize>> {
    let mut seen = vec![false; member.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..member.len() {
        if !member[start] || seen[start] || labels[start] != 0 {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(p) = queue.pop_front() {
            pixels.push(p);
            for q in neighbors(p, width, height, offsets) {
                if member[q] && !seen[q] && labels[q] == 0 {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        out.push(pixels);
    }
    out
}

/// Marker-based watershed on the building-probability landscape.
///
/// Seeds are 4-connected components of confident interior pixels (building
/// at or above `t_building`, border below `t_border`) of at least
/// `min_seed_area` pixels. Seeds flood over the building domain through
/// 8-neighborhoods, highest probability first. Equal probabilities flood in
/// first-in first-out order, so a flat plateau is split by distance to the
/// seeds.
/// Domain pixels no seed reaches become instances of their own, one per
/// 8-connected component. Labels are renumbered by first appearance in scan
/// order, so identical masks give identical maps.
pub fn watershed_instances(masks: &MaskPair, params: &WatershedParams) -> InstanceLabelMap {
    let (w, h) = (masks.width(), masks.height());
    let building = masks.building();
    let border = masks.border();
    let domain: Vec<bool> = building.iter().map(|&b| b >= params.t_building).collect();
    let seed: Vec<bool> = domain
        .iter()
        .zip(border)
        .map(|(&d, &bd)| d && bd < params.t_border)
        .collect();

    let mut labels = vec![0u32; w * h];
    let mut next = 1u32;
    let mut heap = BinaryHeap::new();
    let mut order = 0usize;
    let mut push = |heap: &mut BinaryHeap<(u8, Reverse<usize>, usize)>, p: usize| {
        heap.push((building[p], Reverse(order), p));
        order += 1;
    };
    for comp in components(&seed, &labels, w, h, &N4) {
        if comp.len() < params.min_seed_area {
            continue;
        }
        for &p in &comp {
            labels[p] = next;
            push(&mut heap, p);
        }
        next += 1;
    }

    while let Some((_, _, p)) = heap.pop() {
        let label = labels[p];
        for q in neighbors(p, w, h, &N8) {
            if domain[q] && labels[q] == 0 {
                labels[q] = label;
                push(&mut heap, q);
            }
        }
    }

    for comp in components(&domain, &labels, w, h, &N8) {
        for p in comp {
            labels[p] = next;
        }
        next += 1;
    }

    // Dense renumbering by first appearance.
    let mut remap = vec![0u32; next as usize];
    let mut count = 0u32;
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let slot = &mut remap[*l as usize];
        if *slot == 0 {
            count += 1;
            *slot = count;
        }
        *l = *slot;
    }

    InstanceLabelMap { width: w, height: h, labels, count }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::GeoTransform;

    fn masks(w: usize, h: usize, building: Vec<u8>, border: Vec<u8>) -> MaskPair {
        MaskPair::new(w, h, building, border, GeoTransform::identity()).unwrap()
    }

    /// Two 10x10 squares side by side at (2..12) and (12..22) columns, rows
    /// 2..12 of a 24x14 tile; border channel marks column 11.
    pub(crate) fn touching_squares() -> MaskPair {
        let (w, h) = (24, 14);
        let mut building = vec![0u8; w * h];
        let mut border = vec![0u8; w * h];
        for r in 2..12 {
            for c in 2..22 {
                building[r * w + c] = 230;
            }
            border[r * w + 11] = 255;
        }
        masks(w, h, building, border)
    }

    #[test]
    fn touching_squares_split_in_two() {
        let m = touching_squares();
        let labels = watershed_instances(&m, &WatershedParams::default());
        assert_eq!(labels.count(), 2);
        // Flood-fill oracle: the seam column goes to the left seed, which
        // precedes the right seed in scan order on every row.
        assert_eq!(labels.pixel_count(1), 100);
        assert_eq!(labels.pixel_count(2), 100);
        for r in 2..12 {
            assert_eq!(labels.get(11, r), 1);
            assert_eq!(labels.get(12, r), 2);
        }
    }

    #[test]
    fn wide_border_band_split_evenly() {
        let (w, h) = (24, 14);
        let mut building = vec![0u8; w * h];
        let mut border = vec![0u8; w * h];
        for r in 2..12 {
            for c in 2..22 {
                building[r * w + c] = 230;
            }
            border[r * w + 11] = 255;
            border[r * w + 12] = 200;
        }
        let labels = watershed_instances(&masks(w, h, building, border), &WatershedParams::default());
        assert_eq!(labels.count(), 2);
        assert_eq!(labels.pixel_count(1), 100);
        assert_eq!(labels.pixel_count(2), 100);
    }

    #[test]
    fn single_blob_single_instance() {
        let (w, h) = (30, 30);
        let mut building = vec![0u8; w * h];
        for r in 5..25 {
            for c in 5..25 {
                building[r * w + c] = 200;
            }
        }
        let labels = watershed_instances(&masks(w, h, building, vec![0; w * h]), &WatershedParams::default());
        assert_eq!(labels.count(), 1);
        assert_eq!(labels.pixel_count(1), 400);
    }

    #[test]
    fn empty_mask_has_no_instances() {
        let labels = watershed_instances(&masks(8, 8, vec![0; 64], vec![0; 64]), &WatershedParams::default());
        assert_eq!(labels.count(), 0);
        assert!(labels.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn unseeded_domain_still_labeled() {
        // A 3-pixel blob (below min seed area) and a blob entirely marked as border.
        let (w, h) = (10, 3);
        let mut building = vec![0u8; w * h];
        let mut border = vec![0u8; w * h];
        for c in 0..3 {
            building[w + c] = 200;
        }
        for c in 6..9 {
            building[w + c] = 200;
            border[w + c] = 200;
        }
        let labels = watershed_instances(&masks(w, h, building, border), &WatershedParams::default());
        assert_eq!(labels.count(), 2);
        assert_eq!(labels.pixel_count(1), 3);
        assert_eq!(labels.pixel_count(2), 3);
    }

    #[test]
    fn flooding_follows_probability() {
        // Pixel 5 is claimed from pixel 6 (250) before pixel 3 (240) pops;
        // pixel 4 is then claimed from pixel 3.
        let (w, h) = (9, 1);
        let building = vec![250, 250, 250, 240, 130, 200, 250, 250, 250];
        let border = vec![0, 0, 0, 0, 255, 255, 0, 0, 0];
        let p = WatershedParams { min_seed_area: 3, ..WatershedParams::default() };
        let labels = watershed_instances(&masks(w, h, building, border), &p);
        assert_eq!(labels.count(), 2);
        assert_eq!(labels.labels(), &[1, 1, 1, 1, 1, 2, 2, 2, 2]);
    }
}
