//! File formats: binary PPM images, CSV series and UCR-style TSV corpora.

mod image;
mod series;

pub use image::{decode_ppm, encode_ppm, flatten_image, read_ppm, unflatten_image, write_ppm, ImageTensor};
pub use series::{
    load_corpus, parse_series_csv, parse_ucr_tsv, read_series_csv, read_ucr_tsv, write_series_csv, LabeledSeries,
};
