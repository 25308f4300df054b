//! SVG rendering of scenes, north up, in meters.

use std::fmt::Write as _;

use crate::types::{MapClass, Scene};

pub fn class_color(class: MapClass) -> &'static str {
    match class {
        MapClass::Divider => "#1f5fd6",
        MapClass::PedCross => "#1a9e3a",
        MapClass::Curb => "#d62424",
    }
}

pub fn scene_to_svg(scene: &Scene) -> String {
    let e = scene.grid.extent();
    let (w, h) = (e.x_max - e.x_min, e.y_max - e.y_min);
    let stroke = scene.grid.resolution();
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{}" height="{}">"#,
        scene.grid.width() * 3,
        scene.grid.height() * 3
    )
    .unwrap();
    writeln!(s, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##).unwrap();
    // Flip y so that larger world y is drawn higher.
    writeln!(s, r#"<g transform="translate({} {}) scale(1 -1)">"#, -e.x_min, e.y_max).unwrap();
    for v in &scene.gt_vectors {
        let pts: Vec<String> = v.points.iter().map(|p| format!("{:.3},{:.3}", p.x, p.y)).collect();
        let tag = if v.closed { "polygon" } else { "polyline" };
        writeln!(
            s,
            r#"<{tag} class="{}" points="{}" fill="none" stroke="{}" stroke-width="{stroke}"/>"#,
            v.class,
            pts.join(" "),
            class_color(v.class)
        )
        .unwrap();
    }
    writeln!(
        s,
        r##"<circle cx="{:.3}" cy="{:.3}" r="{}" fill="#000000"/>"##,
        scene.ego.x,
        scene.ego.y,
        4.0 * stroke
    )
    .unwrap();
    s.push_str("</g>\n</svg>\n");
    s
}
