//! Heatmap rendering of 2-D probability maps.
//!
//! One `<rect class="cell">` per grid point, y increasing upward, with a
//! linear color scale over [0, 1] and a colorbar. Output depends only on the
//! map and the options, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::ProbabilityMap;
use crate::output::fmt_sig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Colormap {
    #[default]
    Gray,
    Viridis,
}

impl FromStr for Colormap {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gray" | "grey" => Ok(Self::Gray),
            "viridis" => Ok(Self::Viridis),
            _ => Err(format!("unknown colormap `{s}` (expected gray or viridis)")),
        }
    }
}

/// Sampled viridis stops at 0, 1/8, …, 1.
const VIRIDIS: [[u8; 3]; 9] = [
    [0x44, 0x01, 0x54],
    [0x47, 0x2d, 0x7b],
    [0x3b, 0x52, 0x8b],
    [0x2c, 0x72, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x28, 0xae, 0x80],
    [0x5e, 0xc9, 0x62],
    [0xad, 0xdc, 0x30],
    [0xfd, 0xe7, 0x25],
];

impl Colormap {
    /// `#rrggbb` for `v` clamped to [0, 1].
    pub fn color(self, v: f64) -> String {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        let rgb = match self {
            Colormap::Gray => {
                let g = (v * 255.0).round() as u8;
                [g, g, g]
            }
            Colormap::Viridis => {
                let x = v * (VIRIDIS.len() - 1) as f64;
                let k = (x.floor() as usize).min(VIRIDIS.len() - 2);
                let f = x - k as f64;
                let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
                std::array::from_fn(|i| {
                    (a[i] as f64 + f * (b[i] as f64 - a[i] as f64)).round() as u8
                })
            }
        };
        format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    PU0,
    PL0,
}

impl Field {
    pub const BOTH: [Field; 2] = [Field::PU0, Field::PL0];

    pub fn name(self) -> &'static str {
        match self {
            Field::PU0 => "p_u0",
            Field::PL0 => "p_l0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvgOptions {
    pub colormap: Colormap,
    /// Edge length of one grid cell, px.
    pub cell_px: u32,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            colormap: Colormap::Gray,
            cell_px: 4,
        }
    }
}

const MARGIN_LEFT: u32 = 80;
const MARGIN_RIGHT: u32 = 90;
const MARGIN_TOP: u32 = 30;
const MARGIN_BOTTOM: u32 = 60;
const BAR_WIDTH: u32 = 16;
const BAR_STEPS: u32 = 64;

/// Renders one field of a 2-D map. Fails on 1-D maps.
pub fn render_svg(map: &ProbabilityMap, field: Field, opts: &SvgOptions) -> Result<String> {
    let y_axis = map
        .grid
        .y
        .as_ref()
        .ok_or_else(|| Error::InvalidGrid("SVG output needs a 2-D map".into()))?;
    if opts.cell_px == 0 {
        return Err(Error::InvalidParameter {
            name: "cell_px",
            message: "must be > 0".into(),
        });
    }
    let x_axis = &map.grid.x;
    let data = match field {
        Field::PU0 => &map.p_u0,
        Field::PL0 => &map.p_l0,
    };
    let (nx, ny, c) = (x_axis.len() as u32, y_axis.len() as u32, opts.cell_px);
    let (plot_w, plot_h) = (nx * c, ny * c);
    let width = MARGIN_LEFT + plot_w + MARGIN_RIGHT;
    let height = MARGIN_TOP + plot_h + MARGIN_BOTTOM;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2,
        field.name()
    );

    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for iy in 0..ny {
        let py = MARGIN_TOP + (ny - 1 - iy) * c;
        for ix in 0..nx {
            let px = MARGIN_LEFT + ix * c;
            let v = data[iy as usize][ix as usize];
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{px}" y="{py}" width="{c}" height="{c}" fill="{}"/>"#,
                opts.colormap.color(v)
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    // Ticks at both ends of each axis.
    let bottom = MARGIN_TOP + plot_h;
    for (v, x, anchor) in [
        (x_axis.values[0], MARGIN_LEFT, "start"),
        (x_axis.values[nx as usize - 1], MARGIN_LEFT + plot_w, "end"),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="{anchor}">{}</text>"#,
            bottom + 16,
            fmt_sig(v)
        );
    }
    for (v, y) in [
        (y_axis.values[0], bottom),
        (y_axis.values[ny as usize - 1], MARGIN_TOP + 10),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6,
            fmt_sig(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2,
        bottom + 40,
        escape(&x_axis.label())
    );
    let (ly_x, ly_y) = (24, MARGIN_TOP + plot_h / 2);
    let _ = writeln!(
        s,
        r#"<text x="{ly_x}" y="{ly_y}" text-anchor="middle" transform="rotate(-90 {ly_x} {ly_y})">{}</text>"#,
        escape(&y_axis.label())
    );

    // Colorbar, value 1 at the top.
    let bar_x = MARGIN_LEFT + plot_w + 20;
    let _ = writeln!(s, r#"<g class="colorbar" shape-rendering="crispEdges">"#);
    for k in 0..BAR_STEPS {
        let y0 = MARGIN_TOP as f64 + plot_h as f64 * k as f64 / BAR_STEPS as f64;
        let y1 = MARGIN_TOP as f64 + plot_h as f64 * (k + 1) as f64 / BAR_STEPS as f64;
        let v = 1.0 - (k as f64 + 0.5) / BAR_STEPS as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{bar_x}" y="{}" width="{BAR_WIDTH}" height="{}" fill="{}"/>"#,
            fmt_sig(y0),
            fmt_sig(y1 - y0),
            opts.colormap.color(v)
        );
    }
    let _ = writeln!(s, "</g>");
    for (label, y) in [("1", MARGIN_TOP + 10), ("0", bottom)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}">{label}</text>"#,
            bar_x + BAR_WIDTH + 4
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Axis, SweepGrid};

    fn map(nx: usize, ny: usize, f: impl Fn(usize, usize) -> f64) -> ProbabilityMap {
        let ax = |n: usize, name: &str| {
            Axis::new(name, "ps", (0..n).map(|i| i as f64).collect()).unwrap()
        };
        let field: Vec<Vec<f64>> = (0..ny)
            .map(|iy| (0..nx).map(|ix| f(ix, iy)).collect())
            .collect();
        ProbabilityMap {
            grid: SweepGrid::two_d(ax(nx, "W1"), ax(ny, "W2")),
            p_u0: field.clone(),
            p_l0: field,
        }
    }

    fn cell_fills(svg: &str) -> Vec<String> {
        svg.lines()
            .filter(|l| l.contains(r#"class="cell""#))
            .map(|l| l.split("fill=\"").nth(1).unwrap()[..7].to_string())
            .collect()
    }

    #[test]
    fn two_by_two_map_has_four_cells() {
        let svg = render_svg(
            &map(2, 2, |x, y| (x + 2 * y) as f64 / 3.0),
            Field::PU0,
            &SvgOptions::default(),
        )
        .unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(cell_fills(&svg).len(), 4);
        assert!(svg.contains("W1 (ps)") && svg.contains("W2 (ps)"));
    }

    #[test]
    fn constant_map_is_one_color() {
        for cmap in [Colormap::Gray, Colormap::Viridis] {
            let opts = SvgOptions {
                colormap: cmap,
                cell_px: 3,
            };
            let fills = cell_fills(&render_svg(&map(5, 4, |_, _| 0.5), Field::PL0, &opts).unwrap());
            assert_eq!(fills.len(), 20);
            assert!(fills.iter().all(|f| *f == cmap.color(0.5)));
        }
        assert_eq!(Colormap::Gray.color(0.5), "#808080");
    }

    #[test]
    fn color_scale_is_linear_and_clamped() {
        assert_eq!(Colormap::Gray.color(0.0), "#000000");
        assert_eq!(Colormap::Gray.color(1.0), "#ffffff");
        assert_eq!(Colormap::Gray.color(1.7), "#ffffff");
        assert_eq!(Colormap::Gray.color(-0.2), "#000000");
        assert_eq!(Colormap::Viridis.color(0.0), "#440154");
        assert_eq!(Colormap::Viridis.color(1.0), "#fde725");
        assert_eq!(Colormap::Viridis.color(0.5), "#21918c");
    }

    #[test]
    fn one_d_maps_are_rejected() {
        let m = ProbabilityMap {
            grid: SweepGrid::one_d(Axis::new("W1", "ps", vec![0.0, 1.0]).unwrap()),
            p_u0: vec![vec![1.0, 0.0]],
            p_l0: vec![vec![1.0, 0.0]],
        };
        assert!(render_svg(&m, Field::PU0, &SvgOptions::default()).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let m = map(7, 3, |x, y| ((x * 13 + y * 7) % 11) as f64 / 10.0);
        let opts = SvgOptions {
            colormap: Colormap::Viridis,
            cell_px: 5,
        };
        assert_eq!(
            render_svg(&m, Field::PU0, &opts).unwrap(),
            render_svg(&m, Field::PU0, &opts).unwrap()
        );
    }
}
