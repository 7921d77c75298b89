use super::{orient, point_segment_distance, GeometryError, Location, Point, Polygon, Triangle};

pub(super) fn triangulate(poly: &Polygon) -> Result<Vec<Triangle>, GeometryError> {
    let v = poly.vertices();
    if poly.is_convex() {
        return Ok((1..v.len() - 1).map(|i| Triangle::new(v[0], v[i], v[i + 1])).collect());
    }
    ear_clip(v)
}

fn strictly_inside(p: Point, a: Point, b: Point, c: Point) -> bool {
    orient(a, b, p) > 0.0 && orient(b, c, p) > 0.0 && orient(c, a, p) > 0.0
}

fn on_closed_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}

/// Classic O(n²) ear clipping on a counterclockwise simple polygon.
fn ear_clip(v: &[Point]) -> Result<Vec<Triangle>, GeometryError> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut out = Vec::with_capacity(v.len() - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ip, ic, inx) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (v[ip], v[ic], v[inx]);
            if orient(a, b, c) <= 0.0 {
                continue;
            }
            // an ear may not contain any other remaining vertex, boundary included
            let blocked = idx.iter().any(|&j| {
                j != ip && j != ic && j != inx && {
                    let p = v[j];
                    strictly_inside(p, a, b, c) || (p != a && p != c && on_closed_triangle(p, a, b, c))
                }
            });
            if blocked {
                continue;
            }
            out.push(Triangle::new(a, b, c));
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            return Err(GeometryError::TriangulationFailed(format!(
                "no ear found with {} vertices left",
                idx.len()
            )));
        }
    }
    let (a, b, c) = (v[idx[0]], v[idx[1]], v[idx[2]]);
    if orient(a, b, c) <= 0.0 {
        return Err(GeometryError::TriangulationFailed("final triangle not positive".into()));
    }
    out.push(Triangle::new(a, b, c));
    Ok(out)
}

/// Fan from `apex` over every edge, or None when some edge is seen from behind.
pub(super) fn star_fan(poly: &Polygon, apex: Point) -> Option<Vec<Triangle>> {
    let diam = poly.diameter();
    let tol = 1e-13 * diam * diam;
    let mut tris = Vec::new();
    for (p, q) in poly.edges() {
        let o = orient(apex, p, q);
        if o.abs() <= tol && point_segment_distance(apex, p, q) <= 1e-12 * diam {
            // apex sits on this edge; the fan piece is empty
            continue;
        }
        if o <= tol {
            return None;
        }
        tris.push(Triangle::new(apex, p, q));
    }
    Some(tris)
}

pub(super) fn triangulate_with_star(poly: &Polygon, apex: Point) -> Result<Vec<Triangle>, GeometryError> {
    if poly.locate(apex) == Location::Outside {
        return Err(GeometryError::ApexOutside(apex.x, apex.y));
    }
    if let Some(fan) = star_fan(poly, apex) {
        return Ok(fan);
    }
    // not star-visible: refine an ordinary triangulation around the apex
    let base = triangulate(poly)?;
    let diam = poly.diameter();
    let tol = 1e-12 * diam;
    let mut out = Vec::with_capacity(base.len() + 4);
    for t in base {
        let vs = t.vertices();
        if vs.iter().any(|&w| w.dist(apex) <= tol) || !t.contains(apex) {
            out.push(t);
            continue;
        }
        // apex inside or on an edge of this triangle: fan it, dropping empty pieces
        for i in 0..3 {
            let (p, q) = (vs[i], vs[(i + 1) % 3]);
            if point_segment_distance(apex, p, q) <= tol {
                continue;
            }
            out.push(Triangle::new(apex, p, q));
        }
    }
    Ok(out)
}
