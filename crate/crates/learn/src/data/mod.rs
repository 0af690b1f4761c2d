//! MNIST ingestion, symbolic trace sampling and image-sequence datasets.

mod idx;
mod records;
mod sampling;

pub use idx::{
    read_idx_images, read_idx_labels, write_idx_images, write_idx_labels, IdxImages, MnistStore,
    Split, IMAGES_MAGIC, LABELS_MAGIC,
};
pub use records::{
    attach_images, load_dataset, read_dataset, write_dataset, DatasetReader, DatasetRecord, Label,
};
pub use sampling::{
    sample_symbolic_dataset, LabelledTrace, Protocol, SamplingPlan, SymbolicDataset,
    ENUMERATION_LIMIT, SHORT_LEN,
};
