//! Small 2-D convex geometry toolkit for utility regions.

pub type Point = [f64; 2];

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    let (u, v) = (sub(a, o), sub(b, o));
    u[0] * v[1] - u[1] * v[0]
}

fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

/// Turns with `cross <= COLLINEAR_TOL · |u|·|v|` count as straight.
const COLLINEAR_TOL: f64 = 1e-12;

fn left_turn(o: Point, a: Point, b: Point) -> bool {
    let c = cross(o, a, b);
    c > COLLINEAR_TOL * norm(sub(a, o)) * norm(sub(b, o))
}

/// Counter-clockwise convex hull (Andrew's monotone chain) starting at the
/// lexicographically smallest point. Collinear and duplicate points are dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && !left_turn(lower[lower.len() - 2], lower[lower.len() - 1], p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && !left_turn(upper[upper.len() - 2], upper[upper.len() - 1], p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    drop_straight_vertices(lower)
}

/// The chain ends are never tested as turns; a near-straight end vertex
/// (rounding noise) is removed here, cyclically.
fn drop_straight_vertices(mut hull: Vec<Point>) -> Vec<Point> {
    let mut i = 0;
    while hull.len() >= 3 && i < hull.len() {
        let n = hull.len();
        if left_turn(hull[(i + n - 1) % n], hull[i], hull[(i + 1) % n]) {
            i += 1;
        } else {
            hull.remove(i);
            i = 0;
        }
    }
    // restore the lexicographic start
    if let Some(s) = (0..hull.len()).min_by(|&a, &b| hull[a][0].total_cmp(&hull[b][0]).then(hull[a][1].total_cmp(&hull[b][1]))) {
        hull.rotate_left(s);
    }
    hull
}

pub fn scale(poly: &[Point], s: f64) -> Vec<Point> {
    poly.iter().map(|p| [p[0] * s, p[1] * s]).collect()
}

/// Minkowski sum of two convex polygons given counter-clockwise (points and
/// segments allowed), by merging their edge sequences in angular order.
pub fn minkowski_sum(p: &[Point], q: &[Point]) -> Vec<Point> {
    if p.is_empty() {
        return q.to_vec();
    }
    if q.is_empty() {
        return p.to_vec();
    }
    let (p0, pe) = edges_from_bottom(p);
    let (q0, qe) = edges_from_bottom(q);
    let mut merged: Vec<(f64, Point)> = pe.into_iter().chain(qe).collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cur = [p0[0] + q0[0], p0[1] + q0[1]];
    if merged.is_empty() {
        return vec![cur];
    }
    let mut out = vec![cur];
    for (_, e) in merged {
        cur = [cur[0] + e[0], cur[1] + e[1]];
        out.push(cur);
    }
    // the walk closes on the start vertex, up to rounding
    out.pop();
    convex_hull(&out)
}

/// Start vertex (lowest y, then lowest x) and the polygon's edges tagged with
/// their direction angle in `[0, 2π)`.
fn edges_from_bottom(poly: &[Point]) -> (Point, Vec<(f64, Point)>) {
    let start = (0..poly.len())
        .min_by(|&a, &b| poly[a][1].total_cmp(&poly[b][1]).then(poly[a][0].total_cmp(&poly[b][0])))
        .unwrap();
    let n = poly.len();
    let mut edges = Vec::with_capacity(n);
    if n > 1 {
        for s in 0..n {
            let a = poly[(start + s) % n];
            let b = poly[(start + s + 1) % n];
            let e = sub(b, a);
            let mut ang = e[1].atan2(e[0]);
            if ang < 0.0 {
                ang += std::f64::consts::TAU;
            }
            edges.push((ang, e));
        }
    }
    (poly[start], edges)
}

/// Whether `pt` lies in the convex polygon within distance `tol`.
pub fn contains(poly: &[Point], pt: Point, tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => norm(sub(pt, poly[0])) <= tol,
        2 => segment_distance(poly[0], poly[1], pt) <= tol,
        n => (0..n).all(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            // signed distance to the left of edge a->b
            cross(a, b, pt) / norm(sub(b, a)) >= -tol
        }),
    }
}

fn segment_distance(a: Point, b: Point, p: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 { 0.0 } else { ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2 };
    let t = t.clamp(0.0, 1.0);
    norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// Every vertex is a strict left turn.
pub fn is_strictly_convex(poly: &[Point]) -> bool {
    let n = poly.len();
    n < 3 || (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]) > 0.0)
}

/// Intersection of a convex polygon with `{ x : x[axis] >= bound }`.
pub fn clip_at_least(poly: &[Point], axis: usize, bound: f64) -> Vec<Point> {
    let n = poly.len();
    let inside = |p: &Point| p[axis] >= bound;
    let mut out = Vec::new();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if inside(&a) {
            out.push(a);
        }
        if inside(&a) != inside(&b) {
            let t = (bound - a[axis]) / (b[axis] - a[axis]);
            let mut p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            p[axis] = bound;
            out.push(p);
        }
    }
    convex_hull(&out)
}
