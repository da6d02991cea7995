//! Four-colour image encoding of problem instances.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::GridMap;
use crate::scenario::ProblemInstance;

pub type Rgb = [u8; 3];

pub const WHITE: Rgb = [255, 255, 255];
pub const BLACK: Rgb = [0, 0, 0];
pub const GREEN: Rgb = [0, 255, 0];
pub const RED: Rgb = [255, 0, 0];
pub const PALETTE: [Rgb; 4] = [WHITE, BLACK, GREEN, RED];

/// Side length of encoded images.
pub const IMAGE_SIZE: u32 = 227;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl InstanceImage {
    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        InstanceImage { width, height, pixels: vec![color; (width * height) as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        self.pixels[(y * self.width + x) as usize] = c;
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn count(&self, c: Rgb) -> usize {
        self.pixels.iter().filter(|p| **p == c).count()
    }

    /// Row-major RGB bytes.
    pub fn as_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    /// Nearest-neighbour resize; destination pixel `d` samples source pixel
    /// `floor((2d + 1) · src / (2 · dst))`.
    pub fn resize_nearest(&self, width: u32, height: u32) -> InstanceImage {
        let sample = |d: u32, src: u32, dst: u32| ((2 * d as u64 + 1) * src as u64 / (2 * dst as u64)) as u32;
        let mut out = InstanceImage::filled(width, height, BLACK);
        for y in 0..height {
            let sy = sample(y, self.height, height);
            for x in 0..width {
                out.set(x, y, snap(self.get(sample(x, self.width, width), sy)));
            }
        }
        out
    }
}

/// Closest palette colour by squared RGB distance.
pub fn snap(c: Rgb) -> Rgb {
    let d = |p: &Rgb| -> u32 { (0..3).map(|i| (c[i] as i32 - p[i] as i32).pow(2) as u32).sum() };
    *PALETTE.iter().min_by_key(|p| d(p)).expect("palette is non-empty")
}

/// The instance at map resolution: blocked white, free black, goals red,
/// starts green (starts win over goals).
pub fn paint_native(instance: &ProblemInstance, map: &GridMap) -> InstanceImage {
    let mut img = InstanceImage::filled(map.width(), map.height(), BLACK);
    for y in 0..map.height() {
        for x in 0..map.width() {
            if !map.is_passable(crate::grid::NodeId::new(x, y)) {
                img.set(x, y, WHITE);
            }
        }
    }
    for &(_, g) in &instance.agents {
        img.set(g.x, g.y, RED);
    }
    for &(s, _) in &instance.agents {
        img.set(s.x, s.y, GREEN);
    }
    img
}

/// The 227×227 classifier input for `instance`.
pub fn encode(instance: &ProblemInstance, map: &GridMap) -> InstanceImage {
    paint_native(instance, map).resize_nearest(IMAGE_SIZE, IMAGE_SIZE)
}
