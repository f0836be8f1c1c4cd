/// Lowercases and splits text into word and number tokens.
///
/// Every character that is neither alphabetic nor numeric acts as a separator.
/// A run of letters and an adjacent run of digits become separate tokens, so
/// `"10am"` yields `["10", "am"]`.
pub fn normalize_text(text: &str) -> Vec<String> {
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Letter,
        Digit,
    }

    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut class = None;
    for ch in text.chars() {
        let c = if ch.is_alphabetic() {
            Some(Class::Letter)
        } else if ch.is_numeric() {
            Some(Class::Digit)
        } else {
            None
        };
        if c != class && !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        class = c;
        if c.is_some() {
            current.extend(ch.to_lowercase());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}
