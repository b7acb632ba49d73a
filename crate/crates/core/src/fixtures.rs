//! Bundled reference dataset: the 23-doculect Malagasy distance matrix and
//! the sampling towns with coordinates.

use crate::corpus::{load_locations, load_matrix, DistanceMatrix, Doculect};

pub const MATRIX_CSV: &str = include_str!("../data/appendix_a_matrix.csv");
pub const LOCATIONS_CSV: &str = include_str!("../data/locations.csv");

/// Doculect ids in matrix order (1-based in the printed registry).
pub const DOCULECT_IDS: [&str; 23] = [
    "mananjary",
    "vangaindrano",
    "manakara",
    "farafangana",
    "betroka",
    "fianarantsoa",
    "toliara",
    "ambatondranzaka",
    "mandritsara",
    "ampanihy",
    "antananarivo",
    "morondava",
    "fenoarivo-est",
    "tolagnaro",
    "ambovombe",
    "vohemar",
    "miary",
    "antalaha",
    "ambanja",
    "majunga",
    "maintirano",
    "mahanoro",
    "ambilobe",
];

pub fn reference_matrix() -> DistanceMatrix {
    load_matrix(MATRIX_CSV, None).expect("bundled matrix is valid")
}

pub fn reference_locations() -> Vec<Doculect> {
    load_locations(LOCATIONS_CSV).expect("bundled locations are valid")
}
