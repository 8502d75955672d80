//! Bucketed boundary polylines for containment and nearest-distance queries.

#[derive(Debug, Clone)]
pub(crate) struct SegmentIndex {
    segs: Vec<[[f64; 2]; 2]>,
    lo: [f64; 2],
    hi: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    /// segments overlapping each grid cell (row-major)
    cells: Vec<Vec<u32>>,
    /// segments overlapping each horizontal band of cells
    rows: Vec<Vec<u32>>,
}

fn point_segment_distance(p: [f64; 2], s: &[[f64; 2]; 2]) -> f64 {
    let (a, b) = (s[0], s[1]);
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

impl SegmentIndex {
    pub(crate) fn new(polylines: &[Vec<[f64; 2]>]) -> Self {
        let mut segs = Vec::new();
        for poly in polylines {
            for k in 0..poly.len() {
                segs.push([poly[k], poly[(k + 1) % poly.len()]]);
            }
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for s in &segs {
            for p in s {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let cell = span / 256.0;
        let nx = ((hi[0] - lo[0]) / cell) as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell) as usize + 1;
        let mut cells = vec![Vec::new(); nx * ny];
        let mut rows = vec![Vec::new(); ny];
        let clampx = |v: f64| (((v - lo[0]) / cell) as isize).clamp(0, nx as isize - 1) as usize;
        let clampy = |v: f64| (((v - lo[1]) / cell) as isize).clamp(0, ny as isize - 1) as usize;
        for (id, s) in segs.iter().enumerate() {
            let (x0, x1) = (clampx(s[0][0].min(s[1][0])), clampx(s[0][0].max(s[1][0])));
            let (y0, y1) = (clampy(s[0][1].min(s[1][1])), clampy(s[0][1].max(s[1][1])));
            for (j, row) in rows.iter_mut().enumerate().take(y1 + 1).skip(y0) {
                row.push(id as u32);
                for i in x0..=x1 {
                    cells[j * nx + i].push(id as u32);
                }
            }
        }
        SegmentIndex {
            segs,
            lo,
            hi,
            cell,
            nx,
            ny,
            cells,
            rows,
        }
    }

    pub(crate) fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        (self.lo, self.hi)
    }

    /// Even-odd crossing test with a ray in the +x direction.
    pub(crate) fn contains(&self, p: [f64; 2]) -> bool {
        if p[0] < self.lo[0] || p[0] > self.hi[0] || p[1] < self.lo[1] || p[1] > self.hi[1] {
            return false;
        }
        let j = (((p[1] - self.lo[1]) / self.cell) as usize).min(self.ny - 1);
        let mut inside = false;
        for &id in &self.rows[j] {
            let [a, b] = self.segs[id as usize];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if x > p[0] {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance to the nearest segment; returns a value ≥ `radius` when none is that close.
    pub(crate) fn distance(&self, p: [f64; 2], radius: f64) -> f64 {
        let r = radius.max(self.cell);
        let ix = |v: f64| ((v - self.lo[0]) / self.cell).floor() as isize;
        let iy = |v: f64| ((v - self.lo[1]) / self.cell).floor() as isize;
        let (x0, x1) = (ix(p[0] - r).max(0), ix(p[0] + r).min(self.nx as isize - 1));
        let (y0, y1) = (iy(p[1] - r).max(0), iy(p[1] + r).min(self.ny as isize - 1));
        let mut best = f64::INFINITY;
        if x0 > x1 || y0 > y1 {
            return best;
        }
        for j in y0..=y1 {
            for i in x0..=x1 {
                for &id in &self.cells[j as usize * self.nx + i as usize] {
                    best = best.min(point_segment_distance(p, &self.segs[id as usize]));
                }
            }
        }
        best
    }
}
