import io

import numpy as np
import pytest
from PIL import Image

from alqa.catalog import load_catalog
from alqa.errors import CatalogMismatchError, ContractError
from alqa.renderer import VehicleConfig, generate_dataset, part_jitters, render, _part_mask
from alqa.types import Label, Perspective

CATALOG = load_catalog()


def _plain_config(defects=frozenset(), seed=7):
    options = {}
    for persp in Perspective:
        options[f"background:{persp.value}"] = 0
        for part in CATALOG.parts_of(persp):
            options[part.name] = 0
    return VehicleConfig(
        config_id="cfgtest", option_vector=options, defect_set=frozenset(defects), gen_seed=seed
    )


class TestGenerateDataset:
    def test_exact_defective_count(self):
        configs = generate_dataset(200, 0.5, seed=3, catalog=CATALOG)
        assert sum(c.is_defective for c in configs) == 100
        assert len({c.config_id for c in configs}) == 200

    def test_zero_fraction(self):
        configs = generate_dataset(50, 0.0, seed=3, catalog=CATALOG)
        assert all(not c.is_defective for c in configs)

    def test_determinism(self):
        a = generate_dataset(40, 0.5, seed=5, catalog=CATALOG)
        b = generate_dataset(40, 0.5, seed=5, catalog=CATALOG)
        assert a == b
        c = generate_dataset(40, 0.5, seed=6, catalog=CATALOG)
        assert a != c

    def test_defective_configs_visible_in_every_perspective(self):
        configs = generate_dataset(60, 0.5, seed=9, catalog=CATALOG)
        for cfg in configs:
            if cfg.is_defective:
                for persp in Perspective:
                    assert cfg.defect_set & CATALOG.part_names(persp)

    def test_preconditions(self):
        with pytest.raises(ContractError):
            generate_dataset(0, 0.5, seed=0, catalog=CATALOG)
        with pytest.raises(ContractError):
            generate_dataset(10, 1.5, seed=0, catalog=CATALOG)


class TestRender:
    def test_clean_config_has_no_black_and_correct_label(self):
        rec = render(_plain_config(), Perspective.EXTERIOR_FRONT, CATALOG)
        assert rec.ground_truth is Label.CORRECT
        assert rec.pixels.shape == (256, 256, 3)
        assert not np.any(np.all(rec.pixels == 0, axis=2))

    def test_defective_part_is_black_over_its_region(self):
        cfg = _plain_config({"taillight_left"})
        rec = render(cfg, Perspective.EXTERIOR_REAR, CATALOG)
        assert rec.ground_truth is Label.DEFECTIVE
        part = CATALOG.find_part(Perspective.EXTERIOR_REAR, "taillight_left")
        jit = part_jitters(cfg, Perspective.EXTERIOR_REAR, CATALOG)["taillight_left"]
        mask = _part_mask(part, jit, 256)
        assert np.all(rec.pixels[mask] == 0)
        black = np.all(rec.pixels == 0, axis=2)
        assert black[mask].sum() >= 0.01 * 256 * 256  # >= 1% of pixels, inside the region

    def test_invisible_defect_labels_correct(self):
        cfg = _plain_config({"taillight_left"})  # an exterior-rear part
        rec = render(cfg, Perspective.INTERIOR_FRONT, CATALOG)
        assert rec.ground_truth is Label.CORRECT
        assert not np.any(np.all(rec.pixels == 0, axis=2))

    def test_unknown_part_rejected(self):
        with pytest.raises(CatalogMismatchError):
            render(_plain_config({"flux_capacitor"}), Perspective.EXTERIOR_FRONT, CATALOG)

    def test_identical_png_bytes(self):
        cfg = _plain_config({"grille"})
        images = []
        for _ in range(2):
            rec = render(cfg, Perspective.EXTERIOR_FRONT, CATALOG)
            buf = io.BytesIO()
            Image.fromarray(rec.pixels).save(buf, format="PNG")
            images.append(buf.getvalue())
        assert images[0] == images[1]

    def test_label_soundness_over_generated_corpus(self):
        configs = generate_dataset(30, 0.5, seed=21, catalog=CATALOG)
        for cfg in configs:
            rec = render(cfg, Perspective.INTERIOR_REAR, CATALOG)
            visible = cfg.defect_set & CATALOG.part_names(Perspective.INTERIOR_REAR)
            expected = Label.DEFECTIVE if visible else Label.CORRECT
            assert rec.ground_truth is expected
            if visible:
                black = np.all(rec.pixels == 0, axis=2)
                assert black.sum() >= 0.01 * 256 * 256

    def test_option_vector_changes_pixels(self):
        base = _plain_config()
        styled = VehicleConfig(
            config_id=base.config_id,
            option_vector=dict(base.option_vector, body_front=1),
            defect_set=base.defect_set,
            gen_seed=base.gen_seed,
        )
        a = render(base, Perspective.EXTERIOR_FRONT, CATALOG)
        b = render(styled, Perspective.EXTERIOR_FRONT, CATALOG)
        assert np.any(a.pixels != b.pixels)
