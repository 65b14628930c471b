//! Doc-test shim for the book chapters (filled in once chapters exist).
