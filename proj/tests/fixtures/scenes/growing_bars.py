from manim import *


class GrowingBars(Scene):
    def construct(self):
        bars = VGroup(*[Rectangle(width=0.6, height=h, fill_opacity=0.8, color=GREEN) for h in (1, 2, 3)])
        bars.arrange(RIGHT, buff=0.4, aligned_edge=DOWN)
        self.play(FadeIn(bars, shift=UP), run_time=0.8)
        self.play(bars.animate.scale(1.3), run_time=0.6)
