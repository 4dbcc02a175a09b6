import numpy as np
import pytest
from PIL import Image, ImageDraw


def draw_tool_image(path, seed, size=96):
    """A bar-shaped tool on a shaded background, distinct per seed."""
    rng = np.random.default_rng(seed)
    vs = np.linspace(40, 90, size, dtype=np.uint8)
    background = np.repeat(vs[:, None], size, axis=1)
    img = Image.fromarray(background).convert("RGB")
    draw = ImageDraw.Draw(img)
    top = int(rng.integers(38, 46))
    left = int(rng.integers(10, 20))
    color = tuple(int(c) for c in rng.integers(150, 255, size=3))
    draw.rectangle([left, top, left + 64, top + 10], fill=color)
    img.save(path)
    return (left, top, left + 64, top + 10)


@pytest.fixture
def sample_images(tmp_path):
    """Three tool images plus their drawn bar rectangles."""
    images_dir = tmp_path / "images"
    images_dir.mkdir()
    boxes = {}
    for i in range(3):
        name = f"tool{i}.png"
        boxes[name] = draw_tool_image(images_dir / name, seed=i)
    return images_dir, boxes
