//! Natural-language color names and perceptual-ish color comparison.
//!
//! Names come from a fixed palette of the 16 basic and 124 extended web
//! colors. Lookup is nearest neighbour by RGB Euclidean distance with ties
//! broken alphabetically, so `#00FFFF` reads as "aqua" rather than "cyan".

use crate::scene::ColorRgba;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NamedColor {
    pub name: &'static str,
    pub color: ColorRgba,
}

impl NamedColor {
    const fn new(name: &'static str, r: u8, g: u8, b: u8) -> Self {
        Self {
            name,
            color: ColorRgba::rgb(r, g, b),
        }
    }
}

/// The 16 basic web colors.
pub const BASE_COLORS: [NamedColor; 16] = [
    NamedColor::new("black", 0, 0, 0),
    NamedColor::new("silver", 192, 192, 192),
    NamedColor::new("gray", 128, 128, 128),
    NamedColor::new("white", 255, 255, 255),
    NamedColor::new("maroon", 128, 0, 0),
    NamedColor::new("red", 255, 0, 0),
    NamedColor::new("purple", 128, 0, 128),
    NamedColor::new("fuchsia", 255, 0, 255),
    NamedColor::new("green", 0, 128, 0),
    NamedColor::new("lime", 0, 255, 0),
    NamedColor::new("olive", 128, 128, 0),
    NamedColor::new("yellow", 255, 255, 0),
    NamedColor::new("navy", 0, 0, 128),
    NamedColor::new("blue", 0, 0, 255),
    NamedColor::new("teal", 0, 128, 128),
    NamedColor::new("aqua", 0, 255, 255),
];

/// The remaining extended web colors, spaced for speech.
pub const EXTENDED_COLORS: [NamedColor; 124] = [
    NamedColor::new("alice blue", 240, 248, 255),
    NamedColor::new("antique white", 250, 235, 215),
    NamedColor::new("aquamarine", 127, 255, 212),
    NamedColor::new("azure", 240, 255, 255),
    NamedColor::new("beige", 245, 245, 220),
    NamedColor::new("bisque", 255, 228, 196),
    NamedColor::new("blanched almond", 255, 235, 205),
    NamedColor::new("blue violet", 138, 43, 226),
    NamedColor::new("brown", 165, 42, 42),
    NamedColor::new("burlywood", 222, 184, 135),
    NamedColor::new("cadet blue", 95, 158, 160),
    NamedColor::new("chartreuse", 127, 255, 0),
    NamedColor::new("chocolate", 210, 105, 30),
    NamedColor::new("coral", 255, 127, 80),
    NamedColor::new("cornflower blue", 100, 149, 237),
    NamedColor::new("cornsilk", 255, 248, 220),
    NamedColor::new("crimson", 220, 20, 60),
    NamedColor::new("cyan", 0, 255, 255),
    NamedColor::new("dark blue", 0, 0, 139),
    NamedColor::new("dark cyan", 0, 139, 139),
    NamedColor::new("dark goldenrod", 184, 134, 11),
    NamedColor::new("dark gray", 169, 169, 169),
    NamedColor::new("dark green", 0, 100, 0),
    NamedColor::new("dark khaki", 189, 183, 107),
    NamedColor::new("dark magenta", 139, 0, 139),
    NamedColor::new("dark olive green", 85, 107, 47),
    NamedColor::new("dark orange", 255, 140, 0),
    NamedColor::new("dark orchid", 153, 50, 204),
    NamedColor::new("dark red", 139, 0, 0),
    NamedColor::new("dark salmon", 233, 150, 122),
    NamedColor::new("dark sea green", 143, 188, 143),
    NamedColor::new("dark slate blue", 72, 61, 139),
    NamedColor::new("dark slate gray", 47, 79, 79),
    NamedColor::new("dark turquoise", 0, 206, 209),
    NamedColor::new("dark violet", 148, 0, 211),
    NamedColor::new("deep pink", 255, 20, 147),
    NamedColor::new("deep sky blue", 0, 191, 255),
    NamedColor::new("dim gray", 105, 105, 105),
    NamedColor::new("dodger blue", 30, 144, 255),
    NamedColor::new("firebrick", 178, 34, 34),
    NamedColor::new("floral white", 255, 250, 240),
    NamedColor::new("forest green", 34, 139, 34),
    NamedColor::new("gainsboro", 220, 220, 220),
    NamedColor::new("ghost white", 248, 248, 255),
    NamedColor::new("gold", 255, 215, 0),
    NamedColor::new("goldenrod", 218, 165, 32),
    NamedColor::new("green yellow", 173, 255, 47),
    NamedColor::new("honeydew", 240, 255, 240),
    NamedColor::new("hot pink", 255, 105, 180),
    NamedColor::new("indian red", 205, 92, 92),
    NamedColor::new("indigo", 75, 0, 130),
    NamedColor::new("ivory", 255, 255, 240),
    NamedColor::new("khaki", 240, 230, 140),
    NamedColor::new("lavender", 230, 230, 250),
    NamedColor::new("lavender blush", 255, 240, 245),
    NamedColor::new("lawn green", 124, 252, 0),
    NamedColor::new("lemon chiffon", 255, 250, 205),
    NamedColor::new("light blue", 173, 216, 230),
    NamedColor::new("light coral", 240, 128, 128),
    NamedColor::new("light cyan", 224, 255, 255),
    NamedColor::new("light goldenrod yellow", 250, 250, 210),
    NamedColor::new("light gray", 211, 211, 211),
    NamedColor::new("light green", 144, 238, 144),
    NamedColor::new("light pink", 255, 182, 193),
    NamedColor::new("light salmon", 255, 160, 122),
    NamedColor::new("light sea green", 32, 178, 170),
    NamedColor::new("light sky blue", 135, 206, 250),
    NamedColor::new("light slate gray", 119, 136, 153),
    NamedColor::new("light steel blue", 176, 196, 222),
    NamedColor::new("light yellow", 255, 255, 224),
    NamedColor::new("lime green", 50, 205, 50),
    NamedColor::new("linen", 250, 240, 230),
    NamedColor::new("magenta", 255, 0, 255),
    NamedColor::new("medium aquamarine", 102, 205, 170),
    NamedColor::new("medium blue", 0, 0, 205),
    NamedColor::new("medium orchid", 186, 85, 211),
    NamedColor::new("medium purple", 147, 112, 219),
    NamedColor::new("medium sea green", 60, 179, 113),
    NamedColor::new("medium slate blue", 123, 104, 238),
    NamedColor::new("medium spring green", 0, 250, 154),
    NamedColor::new("medium turquoise", 72, 209, 204),
    NamedColor::new("medium violet red", 199, 21, 133),
    NamedColor::new("midnight blue", 25, 25, 112),
    NamedColor::new("mint cream", 245, 255, 250),
    NamedColor::new("misty rose", 255, 228, 225),
    NamedColor::new("moccasin", 255, 228, 181),
    NamedColor::new("navajo white", 255, 222, 173),
    NamedColor::new("old lace", 253, 245, 230),
    NamedColor::new("olive drab", 107, 142, 35),
    NamedColor::new("orange", 255, 165, 0),
    NamedColor::new("orange red", 255, 69, 0),
    NamedColor::new("orchid", 218, 112, 214),
    NamedColor::new("pale goldenrod", 238, 232, 170),
    NamedColor::new("pale green", 152, 251, 152),
    NamedColor::new("pale turquoise", 175, 238, 238),
    NamedColor::new("pale violet red", 219, 112, 147),
    NamedColor::new("papaya whip", 255, 239, 213),
    NamedColor::new("peach puff", 255, 218, 185),
    NamedColor::new("peru", 205, 133, 63),
    NamedColor::new("pink", 255, 192, 203),
    NamedColor::new("plum", 221, 160, 221),
    NamedColor::new("powder blue", 176, 224, 230),
    NamedColor::new("rosy brown", 188, 143, 143),
    NamedColor::new("royal blue", 65, 105, 225),
    NamedColor::new("saddle brown", 139, 69, 19),
    NamedColor::new("salmon", 250, 128, 114),
    NamedColor::new("sandy brown", 244, 164, 96),
    NamedColor::new("sea green", 46, 139, 87),
    NamedColor::new("seashell", 255, 245, 238),
    NamedColor::new("sienna", 160, 82, 45),
    NamedColor::new("sky blue", 135, 206, 235),
    NamedColor::new("slate blue", 106, 90, 205),
    NamedColor::new("slate gray", 112, 128, 144),
    NamedColor::new("snow", 255, 250, 250),
    NamedColor::new("spring green", 0, 255, 127),
    NamedColor::new("steel blue", 70, 130, 180),
    NamedColor::new("tan", 210, 180, 140),
    NamedColor::new("thistle", 216, 191, 216),
    NamedColor::new("tomato", 255, 99, 71),
    NamedColor::new("turquoise", 64, 224, 208),
    NamedColor::new("violet", 238, 130, 238),
    NamedColor::new("wheat", 245, 222, 179),
    NamedColor::new("white smoke", 245, 245, 245),
    NamedColor::new("yellow green", 154, 205, 50),
];

/// Largest possible RGB distance, between black and white.
pub const MAX_RGB_DISTANCE: f64 = 441.672_955_930_063_7;

pub fn palette() -> impl Iterator<Item = &'static NamedColor> {
    BASE_COLORS.iter().chain(EXTENDED_COLORS.iter())
}

fn rgb_distance_sq(a: ColorRgba, b: ColorRgba) -> u32 {
    let d = |x: u8, y: u8| (i32::from(x) - i32::from(y)).pow(2) as u32;
    d(a.r, b.r) + d(a.g, b.g) + d(a.b, b.b)
}

pub fn rgb_distance(a: ColorRgba, b: ColorRgba) -> f64 {
    f64::from(rgb_distance_sq(a, b)).sqrt()
}

/// Nearest palette name for a color. Alpha is ignored.
pub fn color_name(c: ColorRgba) -> &'static str {
    palette()
        .min_by(|a, b| {
            rgb_distance_sq(a.color, c)
                .cmp(&rgb_distance_sq(b.color, c))
                .then_with(|| a.name.cmp(b.name))
        })
        .map(|n| n.name)
        .expect("palette is non-empty")
}

/// Looks a color up by its spoken or CSS-style name ("light blue",
/// "lightblue"). Used when scripted replies or users name colors.
pub fn color_by_name(name: &str) -> Option<ColorRgba> {
    let squash = |s: &str| {
        s.chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase()
    };
    let wanted = squash(name).replace("grey", "gray");
    palette()
        .find(|n| squash(n.name) == wanted)
        .map(|n| n.color)
}

/// `1 - distance / max distance` over RGB. 1.0 only for equal colors.
pub fn color_similarity(a: ColorRgba, b: ColorRgba) -> f64 {
    1.0 - rgb_distance(a, b) / MAX_RGB_DISTANCE
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent brute-force oracle: scan every entry, keep the first
    /// strictly better one after sorting by name.
    fn nearest_by_scan(c: ColorRgba) -> &'static str {
        let mut entries: Vec<&NamedColor> = palette().collect();
        entries.sort_by_key(|n| n.name);
        let mut best = entries[0];
        let dist = |n: &NamedColor| {
            let dr = n.color.r as f64 - c.r as f64;
            let dg = n.color.g as f64 - c.g as f64;
            let db = n.color.b as f64 - c.b as f64;
            dr * dr + dg * dg + db * db
        };
        for n in entries {
            if dist(n) < dist(best) {
                best = n;
            }
        }
        best.name
    }

    #[test]
    fn palette_sizes() {
        assert_eq!(BASE_COLORS.len(), 16);
        assert_eq!(EXTENDED_COLORS.len(), 124);
        let mut names: Vec<_> = palette().map(|n| n.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 140);
    }

    #[test]
    fn name_examples() {
        assert_eq!(color_name(ColorRgba::rgb(0xFF, 0, 0)), "red");
        assert_eq!(color_name(ColorRgba::rgb(0xFF, 0xFF, 0xFF)), "white");
        assert_eq!(color_name(ColorRgba::rgb(0xFF, 0xFE, 0)), "yellow");
        assert_eq!(color_name(ColorRgba::rgb(0, 0x80, 0)), "green");
        assert_eq!(nearest_by_scan(ColorRgba::rgb(0xFF, 0xFE, 0)), "yellow");
    }

    #[test]
    fn duplicate_values_break_ties_alphabetically() {
        assert_eq!(color_name(ColorRgba::rgb(0, 0xFF, 0xFF)), "aqua");
        assert_eq!(color_name(ColorRgba::rgb(0xFF, 0, 0xFF)), "fuchsia");
    }

    #[test]
    fn similarity_examples() {
        let black = ColorRgba::rgb(0, 0, 0);
        let white = ColorRgba::rgb(255, 255, 255);
        assert_eq!(color_similarity(black, black), 1.0);
        assert!(color_similarity(black, white).abs() < 1e-12);
        let s = color_similarity(ColorRgba::rgb(0xFF, 0, 0), ColorRgba::rgb(0xFE, 0, 0));
        assert!((s - (1.0 - 1.0 / 441.67)).abs() < 1e-4);
        assert!((s - 0.9977).abs() < 5e-5);
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(color_by_name("Light Blue"), Some(ColorRgba::rgb(0xAD, 0xD8, 0xE6)));
        assert_eq!(color_by_name("darkgrey"), Some(ColorRgba::rgb(0xA9, 0xA9, 0xA9)));
        assert_eq!(color_by_name("octarine"), None);
    }

    #[test]
    fn every_palette_entry_names_itself_or_a_twin() {
        for n in palette() {
            let got = color_name(n.color);
            assert_eq!(color_by_name(got), Some(n.color), "{}", n.name);
        }
    }

    proptest! {
        #[test]
        fn nearest_matches_scan(r: u8, g: u8, b: u8) {
            let c = ColorRgba::rgb(r, g, b);
            prop_assert_eq!(color_name(c), nearest_by_scan(c));
        }

        #[test]
        fn similarity_symmetric_and_bounded(a: [u8; 3], b: [u8; 3]) {
            let ca = ColorRgba::rgb(a[0], a[1], a[2]);
            let cb = ColorRgba::rgb(b[0], b[1], b[2]);
            let s = color_similarity(ca, cb);
            prop_assert_eq!(s, color_similarity(cb, ca));
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s == 1.0, ca == cb);
        }
    }
}
