//! layouts, schedules, schedule transformers and the schedule search.

mod layout;
mod search;
mod transform;

pub use layout::{
    canonical_name, initial_layout, initial_schedule, parse_layout, parse_schedule, print_schedule, ExplodedDim,
    Layout, Preprocess, Schedule, VectorizedDim,
};
pub use search::{search, SearchConfig, SearchResult};
pub use transform::{apply_roll, neighbors, roll_candidates, tile_dim, vectorize_dim, SiteView};
