import json
from datetime import datetime, timedelta, timezone

import pytest

from editintent.revisions import Revision, sha1_of

FIG3_OLD = (
    "While the exact cause is unknown, it is believed to involve a combination of "
    "[[Genetics|genetic]] and environmental factors."
)
FIG3_NEW = (
    "While the exact cause is unknown, Tourette's is believed to involve a combination of "
    "[[Genetics|genetic]] and environmental factors."
)
FIG3_STRIPPED = (
    "While the exact cause is unknown, it is believed to involve a combination of "
    "genetic and environmental factors."
)


def make_revision(
    rev_id,
    text,
    page_id=1,
    parent_id=None,
    ts=None,
    comment="",
    sha1=None,
    title="Fixture page",
    quality_class=None,
):
    if ts is None:
        ts = datetime(2020, 1, 1, tzinfo=timezone.utc) + timedelta(hours=rev_id)
    return Revision(
        rev_id=rev_id,
        page_id=page_id,
        parent_id=parent_id,
        timestamp=ts,
        comment=comment,
        sha1=sha1 if sha1 is not None else sha1_of(text),
        text=text,
        page_title=title,
        quality_class=quality_class,
    )


@pytest.fixture
def fig3_revisions():
    """The clarification example pair, plus an unrelated discarded change."""
    old_text = "Intro line about the disorder.\n" + FIG3_OLD
    new_text = (
        "Intro line about the disorder and eleven completely new words of extra "
        "information appended for this test.\n" + FIG3_NEW
    )
    return [
        make_revision(1, old_text, page_id=7, comment="create", title="Tourette syndrome"),
        make_revision(2, new_text, page_id=7, parent_id=1, comment="clarify subject", title="Tourette syndrome"),
    ]


def dump_xml(pages):
    """Build a pages-meta-history style export document.

    ``pages``: list of (page_id, title, [revision dicts]) where each revision
    dict may carry rev_id, parent_id, timestamp, comment, sha1, text.
    """
    out = ['<mediawiki xml:lang="en">']
    for page_id, title, revisions in pages:
        out.append("  <page>")
        out.append(f"    <title>{title}</title>")
        out.append(f"    <id>{page_id}</id>")
        for rev in revisions:
            out.append("    <revision>")
            out.append(f"      <id>{rev['rev_id']}</id>")
            if rev.get("parent_id") is not None:
                out.append(f"      <parentid>{rev['parent_id']}</parentid>")
            out.append(f"      <timestamp>{rev['timestamp']}</timestamp>")
            if rev.get("comment") is not None:
                out.append(f"      <comment>{rev['comment']}</comment>")
            if rev.get("sha1") is not None:
                out.append(f"      <sha1>{rev['sha1']}</sha1>")
            if "text" in rev:
                out.append(f"      <text>{rev['text']}</text>")
            out.append("    </revision>")
        out.append("  </page>")
    out.append("</mediawiki>")
    return "\n".join(out)


def write_jsonl(path, objects):
    with open(path, "w", encoding="utf-8") as fp:
        for obj in objects:
            fp.write(json.dumps(obj, sort_keys=True) + "\n")
