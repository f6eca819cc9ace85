from data.presets import Presets, Severity


PRESET_NAMES = ("full", "ent_only", "ent_pl", "ent_unif_pl", "no_balancing")

CORRUPTION_KINDS = (
    "gaussian_noise",
    "shot_noise",
    "impulse_noise",
    "defocus_blur",
    "motion_blur",
    "contrast",
    "brightness",
    "pixelate",
    "jpeg_like",
)


def get_preset(name: str):
    return {
        "full": Presets.Full,
        "ent_only": Presets.EntOnly,
        "ent_pl": Presets.EntPl,
        "ent_unif_pl": Presets.EntUnifPl,
        "no_balancing": Presets.NoBalancing,
    }[name]


def get_severity_schedule():
    return Severity()
