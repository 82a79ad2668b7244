use serde::{Deserialize, Serialize};

use super::{DeleteOutcome, EntityId, FragmentDraft, FragmentId, FragmentPatch, ModelError, StoryDocument};

/// One fragment-level change, as sent by a client proposing a layout edit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum FragmentEdit {
    Create { draft: FragmentDraft },
    Update { id: FragmentId, patch: FragmentPatch },
    #[serde(rename_all = "camelCase")]
    SetInterval { id: FragmentId, start_step: i64, end_step: i64 },
    Merge { a: FragmentId, b: FragmentId },
    Delete { id: FragmentId },
    RenameEntity { id: EntityId, name: String },
    DeleteEntity { id: EntityId },
}

/// What a batch of edits did to the fragment set.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EditReport {
    /// Fragments created, modified or removed, in first-touch order.
    pub changed: Vec<FragmentId>,
    pub created: Vec<FragmentId>,
    pub invalid_fragments: Vec<FragmentId>,
}

impl EditReport {
    fn touch(&mut self, id: &FragmentId) {
        if !self.changed.contains(id) {
            self.changed.push(id.clone());
        }
    }
}

impl StoryDocument {
    /// Applies edits in order. On error the document may hold a prefix of the
    /// batch; callers wanting all-or-nothing apply to a clone.
    pub fn apply_edits(&mut self, edits: &[FragmentEdit]) -> Result<EditReport, ModelError> {
        let mut report = EditReport::default();
        for edit in edits {
            match edit {
                FragmentEdit::Create { draft } => {
                    let id = self.create_fragment(draft.clone())?;
                    report.touch(&id);
                    report.created.push(id);
                }
                FragmentEdit::Update { id, patch } => {
                    self.update_fragment(id, patch.clone())?;
                    report.touch(id);
                }
                FragmentEdit::SetInterval { id, start_step, end_step } => {
                    self.set_fragment_interval(id, *start_step, *end_step)?;
                    report.touch(id);
                }
                FragmentEdit::Merge { a, b } => {
                    self.merge_fragments(a, b)?;
                    report.touch(a);
                    report.touch(b);
                }
                FragmentEdit::Delete { id } => {
                    self.delete_fragment(id)?;
                    report.touch(id);
                }
                FragmentEdit::RenameEntity { id, name } => {
                    // names are display data; the layout does not move
                    self.rename_entity(id, name)?;
                }
                FragmentEdit::DeleteEntity { id } => {
                    let DeleteOutcome { modified_fragments, invalid_fragments, .. } = self.delete_entity(id)?;
                    for f in &modified_fragments {
                        report.touch(f);
                    }
                    report.invalid_fragments.extend(invalid_fragments);
                }
            }
        }
        Ok(report)
    }
}
