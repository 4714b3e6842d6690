use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use narrowgap::geometry::{build_scene, Region, SceneConfig};
use narrowgap::mesh::Mesh;

use crate::{Failure, Outcome, PlotArgs, Scale};

const VIRIDIS: [(f64, [f64; 3]); 5] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

const PLOT_WIDTH: f64 = 800.0;
const LEGEND_WIDTH: f64 = 160.0;
const MARGIN: f64 = 20.0;

fn color(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let k = VIRIDIS
        .windows(2)
        .position(|w| t <= w[1].0)
        .unwrap_or(VIRIDIS.len() - 2);
    let (t0, c0) = VIRIDIS[k];
    let (t1, c1) = VIRIDIS[k + 1];
    let s = (t - t0) / (t1 - t0);
    let c: Vec<u8> = (0..3)
        .map(|i| (c0[i] + s * (c1[i] - c0[i])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn missing(path: &Path) -> Failure {
    Failure::input(format!("missing {}", path.display()))
}

fn read_column_csv(path: &Path, columns: usize) -> Outcome<Vec<Vec<f64>>> {
    if !path.is_file() {
        return Err(missing(path));
    }
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let mut row = Vec::with_capacity(columns);
        for i in 1..=columns {
            let v = rec
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    Failure::input(format!("{}: malformed row {:?}", path.display(), rec))
                })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Per-triangle values to color and the values the legend range covers.
struct FieldData {
    per_triangle: Vec<f64>,
    nodal: Option<Vec<f64>>,
}

fn load_field(dir: &Path, name: &str, mesh: &Mesh) -> Outcome<FieldData> {
    if let Some(base) = name.strip_prefix("grad_") {
        let rows = read_column_csv(&dir.join(format!("grad_{base}.csv")), 2)?;
        if rows.len() != mesh.triangles.len() {
            return Err(Failure::input(format!(
                "grad_{base}.csv has {} rows, mesh has {} triangles",
                rows.len(),
                mesh.triangles.len()
            )));
        }
        Ok(FieldData {
            per_triangle: rows.iter().map(|g| g[0].hypot(g[1])).collect(),
            nodal: None,
        })
    } else {
        let rows = read_column_csv(&dir.join(format!("field_{name}.csv")), 1)?;
        if rows.len() != mesh.vertices.len() {
            return Err(Failure::input(format!(
                "field_{name}.csv has {} rows, mesh has {} vertices",
                rows.len(),
                mesh.vertices.len()
            )));
        }
        let nodal: Vec<f64> = rows.into_iter().map(|r| r[0]).collect();
        let per_triangle = mesh
            .triangles
            .iter()
            .map(|t| (nodal[t[0]] + nodal[t[1]] + nodal[t[2]]) / 3.0)
            .collect();
        Ok(FieldData {
            per_triangle,
            nodal: Some(nodal),
        })
    }
}

pub fn run(args: &PlotArgs) -> Outcome {
    let dir = &args.out;
    let scene_path = dir.join("scene.json");
    let text = fs::read_to_string(&scene_path).map_err(|_| missing(&scene_path))?;
    let scene = build_scene(&SceneConfig::from_json(&text)?)?;
    for f in ["vertices.csv", "triangles.csv"] {
        if !dir.join(f).is_file() {
            return Err(missing(&dir.join(f)));
        }
    }
    let mesh = Mesh::read_csv(dir)?;
    let region = Region::parse(&args.region, scene.profile().neck_halfwidth)?;
    let tris: Vec<usize> = match region {
        Region::All => (0..mesh.triangles.len()).collect(),
        r => mesh.triangles_in(&scene, &r),
    };
    if tris.is_empty() {
        return Err(Failure::input(format!(
            "region '{}' contains no triangles",
            args.region
        )));
    }
    let field = load_field(dir, &args.field, &mesh)?;
    let svg = render(&mesh, &tris, &field, &args.field, &args.region, args.scale);
    let path = args
        .svg
        .clone()
        .unwrap_or_else(|| dir.join(format!("{}.svg", args.field)));
    fs::write(&path, svg)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    println!("{}", path.display());
    Ok(())
}

fn render(
    mesh: &Mesh,
    tris: &[usize],
    field: &FieldData,
    name: &str,
    region: &str,
    scale: Scale,
) -> String {
    let range_values: Vec<f64> = match &field.nodal {
        Some(nodal) => {
            let mut vs: Vec<usize> = tris.iter().flat_map(|&t| mesh.triangles[t]).collect();
            vs.sort_unstable();
            vs.dedup();
            vs.into_iter().map(|v| nodal[v]).collect()
        }
        None => tris.iter().map(|&t| field.per_triangle[t]).collect(),
    };
    let lo = range_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = range_values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let log = scale == Scale::Log && lo > 0.0;
    let normalize = |v: f64| -> f64 {
        if hi <= lo {
            return 0.5;
        }
        if log {
            (v.max(lo).ln() - lo.ln()) / (hi.ln() - lo.ln())
        } else {
            (v - lo) / (hi - lo)
        }
    };

    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &t in tris {
        for v in mesh.triangles[t] {
            let p = mesh.vertices[v];
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
    }
    let sx = PLOT_WIDTH / (x1 - x0).max(1e-300);
    let natural = (y1 - y0) * sx;
    let height = natural.clamp(240.0, PLOT_WIDTH);
    let sy = height / (y1 - y0).max(1e-300);
    let width = PLOT_WIDTH + LEGEND_WIDTH + 3.0 * MARGIN;
    let total_h = height + 2.0 * MARGIN;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{total_h:.0}" viewBox="0 0 {width:.0} {total_h:.0}">"#
    );
    let _ = writeln!(s, "<title>{name} over {region}</title>");
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(s, r#"<g id="mesh" stroke="none">"#);
    for &t in tris {
        let pts: Vec<String> = mesh.triangles[t]
            .iter()
            .map(|&v| {
                let p = mesh.vertices[v];
                format!(
                    "{:.3},{:.3}",
                    MARGIN + (p[0] - x0) * sx,
                    MARGIN + (y1 - p[1]) * sy
                )
            })
            .collect();
        let c = color(normalize(field.per_triangle[t]));
        let _ = writeln!(s, r#"<polygon points="{}" fill="{c}"/>"#, pts.join(" "));
    }
    let _ = writeln!(s, "</g>");

    let lx = 2.0 * MARGIN + PLOT_WIDTH;
    let bar_h = (height - 60.0).max(100.0);
    let _ = writeln!(
        s,
        r#"<defs><linearGradient id="ramp" x1="0" y1="1" x2="0" y2="0">"#
    );
    for (t, _) in VIRIDIS {
        let _ = writeln!(s, r#"<stop offset="{t}" stop-color="{}"/>"#, color(t));
    }
    let _ = writeln!(s, "</linearGradient></defs>");
    let _ = writeln!(
        s,
        r##"<rect x="{lx:.1}" y="{:.1}" width="24" height="{bar_h:.1}" fill="url(#ramp)" stroke="#000000"/>"##,
        MARGIN + 30.0
    );
    let tx = lx + 30.0;
    let _ = writeln!(
        s,
        r#"<text id="legend-max" x="{tx:.1}" y="{:.1}" font-family="monospace" font-size="12">max {hi:.6e}</text>"#,
        MARGIN + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text id="legend-min" x="{tx:.1}" y="{:.1}" font-family="monospace" font-size="12">min {lo:.6e}</text>"#,
        MARGIN + 30.0 + bar_h
    );
    let _ = writeln!(
        s,
        r#"<text id="legend-title" x="{lx:.1}" y="{:.1}" font-family="monospace" font-size="12">{name} ({})</text>"#,
        MARGIN + 15.0,
        if log { "log" } else { "linear" }
    );
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_end_points() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(f64::NAN), "#440154");
        assert_eq!(color(2.0), "#fde725");
    }
}
