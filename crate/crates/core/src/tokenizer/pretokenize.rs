//! Splits raw text into pieces that tokens never straddle.
//!
//! A piece is one of:
//! - an optional single leading space followed by a run of alphanumerics,
//! - an optional single leading space followed by one punctuation character,
//! - a run of whitespace (minus a trailing space that belongs to the next word).
//!
//! Concatenating the pieces always reproduces the input exactly.

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Word,
    Space,
    Other,
}

fn class_of(c: char) -> Class {
    if c.is_alphanumeric() {
        Class::Word
    } else if c.is_whitespace() {
        Class::Space
    } else {
        Class::Other
    }
}

/// Iterator over the pieces of `text`, as subslices.
pub fn pieces(text: &str) -> Pieces<'_> {
    Pieces { text, pos: 0 }
}

pub struct Pieces<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Pieces<'a> {
    /// End (byte offset) of the run of `class` starting at `from`.
    fn run_end(&self, from: usize, class: Class) -> usize {
        self.text[from..]
            .char_indices()
            .find(|&(_, c)| class_of(c) != class)
            .map_or(self.text.len(), |(i, _)| from + i)
    }

    /// End of the word or punctuation body starting at `from`.
    fn body_end(&self, from: usize) -> usize {
        let c = self.text[from..].chars().next().expect("non-empty body");
        match class_of(c) {
            Class::Word => self.run_end(from, Class::Word),
            _ => from + c.len_utf8(),
        }
    }
}

impl<'a> Iterator for Pieces<'a> {
    type Item = &'a str;

    fn next(&mut self) -> Option<&'a str> {
        let start = self.pos;
        let rest = &self.text[start..];
        let first = rest.chars().next()?;
        let end = if class_of(first) == Class::Space {
            let ws_end = self.run_end(start, Class::Space);
            let followed_by_body = ws_end < self.text.len();
            let last_is_space = self.text[..ws_end].ends_with(' ');
            if followed_by_body && last_is_space {
                if ws_end - start == 1 {
                    // " word" or " ."
                    self.body_end(ws_end)
                } else {
                    // leave the final space for the next word
                    ws_end - 1
                }
            } else {
                ws_end
            }
        } else {
            self.body_end(start)
        };
        self.pos = end;
        Some(&self.text[start..end])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(s: &str) -> Vec<&str> {
        pieces(s).collect()
    }

    #[test]
    fn words_carry_leading_space() {
        assert_eq!(split("A cat sat."), vec!["A", " cat", " sat", "."]);
        assert_eq!(split("a b a b"), vec!["a", " b", " a", " b"]);
    }

    #[test]
    fn whitespace_runs() {
        assert_eq!(split("a  b"), vec!["a", " ", " b"]);
        assert_eq!(split("x\n"), vec!["x", "\n"]);
        assert_eq!(split("x\n y"), vec!["x", "\n", " y"]);
        assert_eq!(split("  "), vec!["  "]);
        assert_eq!(split("a\tb"), vec!["a", "\t", "b"]);
    }

    #[test]
    fn punctuation_is_single_char() {
        assert_eq!(split("claim 1, wherein"), vec!["claim", " 1", ",", " wherein"]);
        assert_eq!(split("(a);"), vec!["(", "a", ")", ";"]);
        assert_eq!(split(" ."), vec![" ."]);
    }

    #[test]
    fn empty() {
        assert!(split("").is_empty());
    }

    #[test]
    fn non_ascii() {
        assert_eq!(split("naïve café"), vec!["naïve", " café"]);
        assert_eq!(split("a » b"), vec!["a", " »", " b"]);
    }
}
