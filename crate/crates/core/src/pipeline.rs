//! Glue between the stages: recording to feature tensor, events to targets.

use crate::channel_select::{select, ChannelConfig};
use crate::edf::Recording;
use crate::error::Result;
use crate::events::EventList;
use crate::features::{extract, FeatureConfig, FeatureTensor};
use crate::montage::{apply_montage, AliasTable, MontageSpec};
use crate::scoring::epoch_labels_at;

/// Montage, channel subset and LFCC extraction in one call.
pub fn recording_features(
    rec: &Recording,
    montage: &MontageSpec,
    aliases: &AliasTable,
    channels: &ChannelConfig,
    cfg: &FeatureConfig,
) -> Result<FeatureTensor> {
    let diff = apply_montage(rec, montage, aliases)?;
    extract(&select(&diff, channels)?, cfg)
}

/// 0/1 training targets, one per epoch, positive when reference events
/// cover more than `fraction` of the epoch.
pub fn epoch_targets(events: &EventList, epochs: usize, epoch: f64, fraction: f64) -> Vec<f64> {
    epoch_labels_at(events.events(), epochs, epoch, fraction)
        .into_iter()
        .map(|b| if b { 1.0 } else { 0.0 })
        .collect()
}
