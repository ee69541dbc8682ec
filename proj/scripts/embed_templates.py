#!/usr/bin/env python3
"""Regenerate include/haluj/templates_data.hpp from assets/templates/*.txt.

Run from the repository root after editing any template asset.
"""
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
ASSETS = ROOT / "assets" / "templates"
OUT = ROOT / "include" / "haluj" / "templates_data.hpp"

IDS = [
    "gen_partial_irrelevant",
    "gen_misleading",
    "filter_misleading",
    "synth_golden",
    "reformat_golden",
    "score_critique",
    "extract_categories",
    "detection_formatted",
    "detection_plain",
]

SENTINEL = "HALUJ_TPL"


def const_name(tid: str) -> str:
    return "kTpl" + "".join(part.capitalize() for part in tid.split("_"))


def main() -> None:
    blocks = []
    for tid in IDS:
        text = (ASSETS / f"{tid}.txt").read_text(encoding="utf-8")
        if f"){SENTINEL}\"" in text:
            raise SystemExit(f"raw-string sentinel collision in {tid}")
        blocks.append(
            f"inline constexpr std::string_view {const_name(tid)} =\n"
            f"    R\"{SENTINEL}({text}){SENTINEL}\";\n"
        )
    body = (
        "#pragma once\n\n"
        "// Generated by scripts/embed_templates.py from assets/templates/.\n"
        "// Do not edit by hand; rerun the script after changing an asset.\n\n"
        "#include <string_view>\n\n"
        "namespace haluj::templates_data {\n\n" + "\n".join(blocks) +
        "\n}  // namespace haluj::templates_data\n"
    )
    OUT.write_text(body, encoding="utf-8")
    print(f"wrote {OUT} ({len(body)} bytes)")


if __name__ == "__main__":
    main()
