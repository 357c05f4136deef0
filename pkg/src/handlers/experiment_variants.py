import logging
from pathlib import Path
from typing import Optional

from services.runner import NamedConfig
from services.tuning_service import AUTO_MOEAD, make_variants, render_variants
from utils.atomic import write_text_atomic
from utils.config_files import DEFAULT_BASE_NAME, write_config

logger = logging.getLogger(__name__)


async def cmd_variants(base: Optional[NamedConfig] = None, out_dir: Optional[Path] = None) -> str:
    """
    Render the single-component variant suite of a base configuration
    (auto-moead by default). With out_dir, the base and every variant are also
    written as configuration files under out_dir/configs.
    """
    base = base or NamedConfig(name=DEFAULT_BASE_NAME, config=AUTO_MOEAD)
    text = render_variants(base.config, base.name)
    if out_dir is not None:
        configs_dir = Path(out_dir) / "configs"
        await write_text_atomic(configs_dir / f"{base.name}.cfg", write_config(base.name, base.config))
        for variant in make_variants(base.config):
            await write_text_atomic(configs_dir / f"{variant.name}.cfg", write_config(variant.name, variant.config))
        await write_text_atomic(Path(out_dir) / "variants.txt", text)
        logger.info(f"Variant suite written to {configs_dir}")
    return text
