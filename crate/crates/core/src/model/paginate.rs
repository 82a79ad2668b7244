/// Default page size in characters for plain-text uploads.
pub const DEFAULT_PAGE_BUDGET: usize = 1200;

/// Splits text into pages of at most `budget` characters.
///
/// A page break never falls inside a word unless a single word is longer than
/// the budget. Pages concatenate back to the original text.
pub fn paginate(text: &str, budget: usize) -> Vec<String> {
    assert!(budget > 0, "page budget must be positive");
    let chars: Vec<char> = text.chars().collect();
    let mut pages = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = (start + budget).min(chars.len());
        if end < chars.len() && !chars[end].is_whitespace() && !chars[end - 1].is_whitespace() {
            // mid-word: back up to just after the last whitespace on this page
            if let Some(ws) = chars[start..end].iter().rposition(|c| c.is_whitespace()) {
                end = start + ws + 1;
            }
        }
        pages.push(chars[start..end].iter().collect());
        start = end;
    }
    pages
}
